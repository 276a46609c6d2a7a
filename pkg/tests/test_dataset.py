"""Long-CSV interchange and structural validation."""

import numpy as np
import pytest

from vdmfpca import DataError, FunctionalDataset, SubjectRecord, read_long_csv, write_long_csv


def toy_dataset():
    t = np.array([1.0, 2.0, 3.5])
    return FunctionalDataset(
        subjects=[
            SubjectRecord("A", 3.5, {"X1": (t, np.array([1.0, 2.0, 3.0])), "X2": (t, np.array([0.5, 0.25, 0.125]))}),
            SubjectRecord("B", 3.5, {"X1": (t, np.array([2.0, 1.0, 0.0])), "X2": (t, np.array([1.0, 1.0, 1.0]))}),
        ],
        variables=["X1", "X2"],
    )


class TestValidation:
    def test_non_increasing_times_rejected(self):
        t = np.array([1.0, 1.0, 2.0])
        with pytest.raises(DataError):
            SubjectRecord("A", 2.0, {"X1": (t, np.zeros(3))})

    def test_time_beyond_domain_rejected(self):
        with pytest.raises(DataError):
            SubjectRecord("A", 2.0, {"X1": (np.array([1.0, 3.0]), np.zeros(2))})

    def test_single_observation_rejected(self):
        with pytest.raises(DataError):
            SubjectRecord("A", 2.0, {"X1": (np.array([1.0]), np.zeros(1))})

    def test_non_finite_value_rejected(self):
        with pytest.raises(DataError):
            SubjectRecord("A", 2.0, {"X1": (np.array([1.0, 2.0]), np.array([0.0, np.inf]))})

    def test_missing_variable_rejected(self):
        rec = SubjectRecord("A", 2.0, {"X1": (np.array([1.0, 2.0]), np.zeros(2))})
        with pytest.raises(DataError):
            FunctionalDataset(subjects=[rec], variables=["X1", "X2"])

    def test_duplicate_subject_rejected(self):
        rec = SubjectRecord("A", 2.0, {"X1": (np.array([1.0, 2.0]), np.zeros(2))})
        rec2 = SubjectRecord("A", 2.0, {"X1": (np.array([1.0, 2.0]), np.zeros(2))})
        with pytest.raises(DataError):
            FunctionalDataset(subjects=[rec, rec2], variables=["X1"])


class TestCsvRoundTrip:
    def test_round_trip(self, tmp_path):
        data = toy_dataset()
        path = tmp_path / "data.csv"
        write_long_csv(data, path)
        back, excluded = read_long_csv(path)
        assert excluded == 0
        assert back.variables == data.variables
        for a, b in zip(data.subjects, back.subjects):
            assert a.subject_id == b.subject_id
            assert a.domain_length == b.domain_length
            for var in data.variables:
                np.testing.assert_array_equal(a.series[var][0], b.series[var][0])
                np.testing.assert_array_equal(a.series[var][1], b.series[var][1])

    def test_malformed_row_reports_line(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("subject_id,variable,time,value\nA,X1,1.0,2.0\nA,X1,oops,3.0\n")
        with pytest.raises(DataError, match=":3:"):
            read_long_csv(path)

    def test_wrong_header_rejected(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("id,var,t,v\nA,X1,1.0,2.0\n")
        with pytest.raises(DataError):
            read_long_csv(path)

    def test_min_obs_filter(self, tmp_path):
        path = tmp_path / "data.csv"
        rows = ["subject_id,variable,time,value"]
        for t in range(1, 6):
            rows.append(f"A,X1,{t},{t * 0.1}")
        for t in range(1, 3):
            rows.append(f"B,X1,{t},{t * 0.1}")
        path.write_text("\n".join(rows) + "\n")
        data, excluded = read_long_csv(path, min_obs=4)
        assert excluded == 1
        assert data.subject_ids() == ["A"]
