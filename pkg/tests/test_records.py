import json
import os
import sys
import tempfile

import pytest

sys.path.append(os.path.abspath(os.path.join(os.path.dirname(__file__), "..")))

from core.errors import DataIOError, RecordFormatError
from core.stats import EnsembleRecord
from records.store import RUN_KIND, RunRecordStore, atomic_write, record_to_line, render_csv


def _record(i=0):
    return EnsembleRecord.from_output(
        i, (0.41, 0.5, 0.63), [0.2, 0.3, 0.5], 0, amplitudes=(0.1 + 0.2j, -0.3j, 0.5),
    )


def test_run_file_round_trip():
    with tempfile.TemporaryDirectory() as tmp:
        path = os.path.join(tmp, "run.jsonl")
        store = RunRecordStore(path)
        assert store.write([_record(0), _record(1)], metadata={"config": {"sites": 3}}) == 2

        header, records = store.read()
        assert header["kind"] == RUN_KIND
        assert header["config"] == {"sites": 3}
        assert records == [_record(0), _record(1)]


def test_record_line_is_stable():
    line = record_to_line(_record())
    assert line.startswith('{"realization_seed": 0, "n_sites": 3, "excited_site": 0, "couplings": [0.40999999999999998')
    assert json.loads(line)["amplitudes"][1] == [0.0, -0.3]


def test_corrupt_and_missing_files():
    with tempfile.TemporaryDirectory() as tmp:
        path = os.path.join(tmp, "bad.jsonl")
        with open(path, "w") as f:
            f.write('{"kind": "ringtherm-run", "version": 1}\n{"realization_seed": 0, "n_sites": 3\n')
        with pytest.raises(RecordFormatError):
            RunRecordStore(path).read()

        with open(path, "w") as f:
            f.write('{"realization_seed": 0, "n_sites": 2, "excited_site": 0, "couplings": [], '
                    '"normalized_intensities": [0.9, 0.9]}\n')
        with pytest.raises(RecordFormatError):
            RunRecordStore(path).read()

        with open(path, "w") as f:
            f.write('{"kind": "ringtherm-run", "version": 1}\n')
        with pytest.raises(RecordFormatError):
            RunRecordStore(path).read()

        with pytest.raises(DataIOError):
            RunRecordStore(os.path.join(tmp, "absent.jsonl")).read()


def test_atomic_write_leaves_target_untouched_on_error():
    with tempfile.TemporaryDirectory() as tmp:
        path = os.path.join(tmp, "out.csv")
        with open(path, "w") as f:
            f.write("old\n")
        with pytest.raises(RuntimeError):
            with atomic_write(path) as f:
                f.write("partial")
                raise RuntimeError("interrupted")
        with open(path) as f:
            assert f.read() == "old\n"
        assert os.listdir(tmp) == ["out.csv"]


def test_render_csv_cells():
    text = render_csv(("a", "b", "c"), [(1, 0.1, True)])
    assert text == "a,b,c\n1,0.10000000000000001,true\n"


if __name__ == "__main__":
    test_run_file_round_trip()
    test_record_line_is_stable()
    test_corrupt_and_missing_files()
    test_atomic_write_leaves_target_untouched_on_error()
    test_render_csv_cells()
    print("ok")
