import io
import json
import random
from dataclasses import replace
from fractions import Fraction as F

import numpy as np
import pytest

from cusickwalk import kernels
from cusickwalk.dist import tail_nonneg, variance
from cusickwalk.measures import p_of
from cusickwalk.scanner import (
    CHECKPOINT_VERSION,
    CheckpointError,
    MemoryBudgetExceeded,
    ScanOptions,
    assert_asymmetry,
    assert_median,
    emit_table,
    find_minimizers,
    level_rows,
    read_checkpoint_header,
    scan,
    table_rows,
)
from cusickwalk.words import odd_to_word, rev, word_to_odd


@pytest.fixture(scope="module")
def scan_16k():
    return scan(1 << 14, ScanOptions(workers=1))


def test_level_rows():
    assert [level_rows(b, 63) for b in range(2, 8)] == [1, 2, 4, 8, 16, 0]
    assert level_rows(7, 70) == 3  # 65, 67, 69
    assert sum(level_rows(b, 2047) for b in range(2, 12)) == 1023


def test_small_scan():
    res = scan(63, ScanOptions(workers=1))
    assert res.minimizers() == [3, 7, 15, 27, 31, 55, 59, 63]
    assert res.count == 31
    assert res.V(41) == F(5, 8) and res.variance(41) == F(51, 16)
    rec = res.record(41)
    assert (rec.word_length, rec.first_letter) == (4, "L") and not rec.is_minimizer
    assert res.record(3).first_letter is None
    with pytest.raises(KeyError):
        res.V(65)


def test_partial_last_level():
    res = scan(70, ScanOptions(workers=1))
    assert res.count == 34 and res.V(69) == tail_nonneg(p_of(69))


def test_agrees_with_engine(scan_16k):
    rng = random.Random(5)
    for _ in range(1000):
        t = rng.randrange(3, (1 << 14) + 1, 2)
        assert scan_16k.V(t) == tail_nonneg(p_of(t))
        assert scan_16k.variance(t) == variance(p_of(t))


def test_rev_symmetry(scan_16k):
    for rec in scan_16k:
        u = word_to_odd(rev(odd_to_word(rec.t)))
        assert scan_16k.V(u) == rec.V
        assert scan_16k.variance(u) == rec.variance


def test_checks(scan_16k):
    med = assert_median(scan_16k)
    asym = assert_asymmetry(scan_16k)
    assert med.ok and med.checked == scan_16k.count
    assert asym.ok and asym.checked == sum(1 for r in scan_16k if r.first_letter == "L")
    # record-iterable path gives the same answers
    recs = list(scan_16k)
    assert assert_median(recs).checked == med.checked
    assert assert_asymmetry(recs).checked == asym.checked
    assert find_minimizers(recs) == find_minimizers(scan_16k)
    assert all(odd_to_word(t).first in (None, "R") for t in find_minimizers(scan_16k))


def test_checks_detect_violations(scan_16k):
    bad = list(scan_16k)[:10]
    bad[3] = replace(bad[3], V=F(1, 4))
    bad[4] = replace(bad[4], first_letter="L", V=F(1, 2))
    assert assert_median(bad).violations == [bad[3].t]
    assert bad[4].t in assert_asymmetry(bad).violations


def _same(a, b):
    assert a.levels == b.levels
    for lv in a.levels:
        assert np.array_equal(a.V_num[lv], b.V_num[lv])
        assert np.array_equal(a.var_num[lv], b.var_num[lv])


@pytest.mark.parametrize("workers", [4, 16])
def test_deterministic_across_workers(workers):
    K = 200_001
    small = dict(split_rows=64, block_bytes=1 << 16)
    base = scan(K, ScanOptions(workers=1, **small))
    _same(base, scan(K, ScanOptions(workers=workers, **small)))


def test_block_and_level_paths_agree():
    K = 100_003
    _same(scan(K, ScanOptions(workers=1, split_rows=1 << 20)),
          scan(K, ScanOptions(workers=1, split_rows=8, block_bytes=1 << 12)))


def test_int32_cells_agree():
    K = 50_001
    _same(scan(K, ScanOptions(workers=1)), scan(K, ScanOptions(workers=1, cell_bits=32)))
    with pytest.raises(ValueError):
        scan(1 << 40, ScanOptions(cell_bits=32))


def test_python_kernel_agrees(monkeypatch):
    K = 30_001
    base = scan(K, ScanOptions(workers=1))
    monkeypatch.setattr(kernels, "advance", kernels.python_advance)
    monkeypatch.setattr(kernels, "BACKEND", "python")
    res = scan(K, ScanOptions(workers=1))
    assert res.backend == "python"
    _same(base, res)


def test_kernel_contract_direct():
    # one step from the root: row 0 is t=3, children are t=5 and t=7
    W, c = 7, 3
    A = np.zeros((1, W), np.int64)
    B = np.zeros((1, W), np.int64)
    A[0, c] = B[0, c] = 1
    out = {}
    for name, fn in [("py", kernels.python_advance), ("active", kernels.advance)]:
        V, var, mean = (np.empty(1, np.int64) for _ in range(3))
        An, Bn = np.empty((2, W), np.int64), np.empty((2, W), np.int64)
        fn(A, B, V, var, mean, 1, c, An, Bn)
        out[name] = (V.tolist(), var.tolist(), mean.tolist(), An.tolist(), Bn.tolist())
    assert out["py"] == out["active"]
    V, var, mean, An, Bn = out["py"]
    assert V == [1] and var == [2] and mean == [0]  # P_3 over 2
    assert An[0] == [0, 0, 1, 0, 1, 0, 0] and Bn[0] == [0, 0, 0, 2, 0, 0, 0]


def test_memory_budget():
    with pytest.raises(MemoryBudgetExceeded) as info:
        scan(1 << 24, ScanOptions(memory_mib=1))
    assert info.value.budget == 1 << 20
    res = scan(1 << 16, ScanOptions(memory_mib=256))
    assert 0 < res.peak_bytes < 256 << 20


def test_memory_env(monkeypatch):
    monkeypatch.setenv("CUSICKWALK_MEMORY_MIB", "1")
    with pytest.raises(MemoryBudgetExceeded):
        scan(1 << 24)


def test_bounds():
    with pytest.raises(ValueError):
        scan(2)
    with pytest.raises(ValueError):
        scan(1 << 60)


def test_emit_table(tmp_path):
    res = scan(511, ScanOptions(workers=1))
    rows = table_rows(res.minimizers())
    assert rows[0] == (0, 3, "eps") and (3, 27, "RLR") in rows and (7, 447, "RLRRRRR") in rows
    text = emit_table(res.minimizers(), "csv", tmp_path / "m.csv")
    assert (tmp_path / "m.csv").read_text() == text
    assert text.splitlines()[:3] == ["length,t,word", "0,3,eps", "1,7,R"]
    js = json.loads(emit_table(res.minimizers(), "json"))
    assert js[3] == {"length": 3, "t": 27, "word": "RLR"}
    with pytest.raises(ValueError):
        emit_table([3], "xml")


def test_write_records():
    res = scan(15, ScanOptions(workers=1))
    buf = io.StringIO()
    res.write_records(buf)
    lines = buf.getvalue().splitlines()
    assert lines[0] == "t,word_length,first_letter,V_numerator,variance_numerator,exponent"
    assert lines[1] == "3,0,,1,2,1" and len(lines) == 8


# -- checkpoints ---------------------------------------------------------------


def test_checkpoint_resume(tmp_path):
    K = 70_001
    path = tmp_path / "ck.npz"
    full = scan(K, ScanOptions(workers=1))
    first = scan(K, ScanOptions(workers=1, checkpoint_path=path, checkpoint_level=12))
    _same(full, first)
    hdr = read_checkpoint_header(path)
    assert hdr["version"] == CHECKPOINT_VERSION and hdr["level"] == 12
    _same(full, scan(K, ScanOptions(workers=1), resume_from=path))
    # a checkpoint from a smaller bound extends to a larger one
    bigger = scan(2 * K + 1, ScanOptions(workers=1), resume_from=path)
    _same(scan(2 * K + 1, ScanOptions(workers=1)), bigger)


def _rewrite(path, mutate):
    with np.load(path) as data:
        arrays = {k: data[k].copy() for k in data.files}
    header = json.loads(bytes(arrays.pop("header")).decode())
    mutate(header, arrays)
    with open(path, "wb") as fh:
        np.savez(fh, header=np.frombuffer(json.dumps(header).encode(), np.uint8), **arrays)


def test_checkpoint_wrong_version(tmp_path):
    path = tmp_path / "ck.npz"
    scan(5000, ScanOptions(workers=1, checkpoint_path=path, checkpoint_level=8))
    _rewrite(path, lambda h, a: h.update(version="cusickwalk-scan-0"))
    with pytest.raises(CheckpointError, match="version"):
        scan(5000, resume_from=path)


def test_checkpoint_corrupt(tmp_path):
    path = tmp_path / "ck.npz"
    scan(5000, ScanOptions(workers=1, checkpoint_path=path, checkpoint_level=8))

    def flip(h, a):
        a["A"][0, a["A"].shape[1] // 2] += 1

    _rewrite(path, flip)
    with pytest.raises(CheckpointError, match="checksum"):
        scan(5000, resume_from=path)
    (tmp_path / "junk.npz").write_bytes(b"not a checkpoint")
    with pytest.raises(CheckpointError):
        scan(5000, resume_from=tmp_path / "junk.npz")


def test_checkpoint_level_needs_path():
    with pytest.raises(ValueError):
        scan(100, ScanOptions(checkpoint_level=4))
