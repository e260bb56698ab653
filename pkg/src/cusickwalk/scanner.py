"""Exact scan of ``V(t) = P_t({0, 1, ...})`` over all odd ``3 <= t <= K``.

Nodes are processed level by level, a level being all odd ``t`` with the
same bit length ``b`` (words of length ``b - 2``).  Row ``i`` of level ``b``
is ``t = 2**(b-1) + 2i + 1``; its children ``2t - 1`` and ``2t + 1`` are
rows ``2i`` and ``2i + 1`` of level ``b + 1``.

Each row carries the pair ``(P_t^L, P_t^R)`` of parent measures rather than
``P_t`` itself: ``P_t = phi(P^L, P^R)``, the L child gets ``(P_t, P^R)`` and
the R child ``(P^L, P_t)``.  So a level only needs the level above it.  All
pairs of word length ``n`` share the denominator ``2**n``, which keeps the
inner loop on plain integers.

Once the frontier is wide enough it is cut into blocks of consecutive rows;
a block's descendants are again consecutive rows, so blocks expand
independently (in worker processes if asked) and write disjoint slices of
the per-level result arrays.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import logging
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Iterator

import numpy as np

from . import kernels
from .dist import DyadicMass
from .words import odd_to_word

__all__ = [
    "ScanRecord",
    "ScanResult",
    "ScanOptions",
    "LevelStore",
    "CheckReport",
    "MemoryBudgetExceeded",
    "CheckpointError",
    "scan",
    "find_minimizers",
    "assert_median",
    "assert_asymmetry",
    "emit_table",
    "table_rows",
    "checkpoint",
    "resume",
    "CHECKPOINT_VERSION",
]

log = logging.getLogger(__name__)

CHECKPOINT_VERSION = "cusickwalk-scan-1"
MAX_K = (1 << 56) - 1
WORKERS_ENV = "CUSICKWALK_WORKERS"
MEMORY_ENV = "CUSICKWALK_MEMORY_MIB"


class MemoryBudgetExceeded(RuntimeError):
    def __init__(self, level: int, needed: int, budget: int):
        super().__init__(
            f"memory budget of {budget >> 20} MiB exceeded at bit-length level {level} "
            f"(needs about {needed >> 20} MiB)"
        )
        self.level = level
        self.needed = needed
        self.budget = budget


class CheckpointError(ValueError):
    pass


@dataclass(frozen=True)
class ScanRecord:
    t: int
    word_length: int
    first_letter: str | None
    V: DyadicMass
    variance: Fraction

    @property
    def is_minimizer(self) -> bool:
        return self.V == Fraction(1, 2)


def level_rows(b: int, K: int) -> int:
    """Number of odd ``t <= K`` with bit length ``b``."""
    if b < 2:
        return 0
    full = 1 << (b - 2)
    return max(0, min(full, (K - (1 << (b - 1)) + 1) // 2))


@dataclass
class LevelStore:
    """Parent pairs for every row of one level, over the denominator ``2**(b-2)``."""

    level: int
    A: np.ndarray
    B: np.ndarray
    center: int

    @property
    def exponent(self) -> int:
        return self.level - 2

    @property
    def nbytes(self) -> int:
        return self.A.nbytes + self.B.nbytes

    @classmethod
    def root(cls, width: int, dtype) -> "LevelStore":
        center = width // 2
        A = np.zeros((1, width), dtype=dtype)
        B = np.zeros((1, width), dtype=dtype)
        A[0, center] = B[0, center] = 1
        return cls(2, A, B, center)

    def recentered(self, width: int, dtype) -> "LevelStore":
        """Copy into a wider (or equal) window with the same zero offset."""
        if width < self.A.shape[1]:
            nz = np.flatnonzero(self.A.any(axis=0) | self.B.any(axis=0))
            lo, hi = nz.min() - self.center, nz.max() - self.center
            if -lo > width // 2 or hi > width // 2:
                raise CheckpointError("stored pairs do not fit the requested window")
        pad = width // 2 - self.center
        out = []
        for M in (self.A, self.B):
            N = np.zeros((M.shape[0], width), dtype=dtype)
            src_lo = max(0, -pad)
            src_hi = min(M.shape[1], width - pad)
            N[:, src_lo + pad : src_hi + pad] = M[:, src_lo:src_hi]
            out.append(N)
        return LevelStore(self.level, out[0], out[1], width // 2)


@dataclass
class ScanOptions:
    workers: int | None = None
    cell_bits: int = 64
    memory_mib: int | None = None
    block_bytes: int = 64 << 20
    split_rows: int = 1 << 12
    checkpoint_path: str | os.PathLike | None = None
    checkpoint_level: int | None = None

    def resolved_workers(self) -> int:
        if self.workers is not None:
            return max(1, self.workers)
        return max(1, int(os.environ.get(WORKERS_ENV, "1")))

    def resolved_budget(self) -> int | None:
        mib = self.memory_mib
        if mib is None and os.environ.get(MEMORY_ENV):
            mib = int(os.environ[MEMORY_ENV])
        return None if mib is None else mib << 20


@dataclass
class ScanResult:
    """Per-level arrays of ``V`` and variance numerators, both over ``2**(b-1)``."""

    K: int
    V_num: dict[int, np.ndarray] = field(default_factory=dict)
    var_num: dict[int, np.ndarray] = field(default_factory=dict)
    peak_bytes: int = 0
    backend: str = ""

    @property
    def levels(self) -> list[int]:
        return sorted(self.V_num)

    @property
    def count(self) -> int:
        return sum(len(v) for v in self.V_num.values())

    def _locate(self, t: int) -> tuple[int, int]:
        if t < 3 or t % 2 == 0 or t > self.K:
            raise KeyError(t)
        b = t.bit_length()
        return b, (t - (1 << (b - 1)) - 1) // 2

    def V(self, t: int) -> DyadicMass:
        b, i = self._locate(t)
        return DyadicMass.of(int(self.V_num[b][i]), b - 1)

    def variance(self, t: int) -> Fraction:
        b, i = self._locate(t)
        return Fraction(int(self.var_num[b][i]), 1 << (b - 1))

    def record(self, t: int) -> ScanRecord:
        b, _ = self._locate(t)
        first = None if b == 2 else ("R" if (t >> (b - 2)) & 1 else "L")
        return ScanRecord(t, b - 2, first, self.V(t), self.variance(t))

    def __iter__(self) -> Iterator[ScanRecord]:
        return self.records()

    def records(self) -> Iterator[ScanRecord]:
        for b in self.levels:
            base = 1 << (b - 1)
            for i in range(len(self.V_num[b])):
                yield self.record(base + 2 * i + 1)

    def t_values(self, b: int) -> np.ndarray:
        return (1 << (b - 1)) + 2 * np.arange(len(self.V_num[b]), dtype=np.int64) + 1

    def minimizers(self) -> list[int]:
        out: list[int] = []
        for b in self.levels:
            half = 1 << (b - 2)
            out.extend(self.t_values(b)[self.V_num[b] == half].tolist())
        return out

    def write_records(self, fh) -> None:
        """All records as CSV: V and variance as numerator over ``2**exponent``."""
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t", "word_length", "first_letter", "V_numerator", "variance_numerator", "exponent"])
        for b in self.levels:
            first_bit = b - 2
            for t, v, s in zip(self.t_values(b).tolist(), self.V_num[b].tolist(), self.var_num[b].tolist()):
                first = "" if b == 2 else ("R" if (t >> first_bit) & 1 else "L")
                w.writerow([t, b - 2, first, v, s, b - 1])


# -- the scan --------------------------------------------------------------


def _cell_dtype(bits: int, n_max: int):
    if bits == 64:
        return np.int64
    if bits == 32:
        if n_max + 1 > 30:
            raise ValueError("32-bit cells only hold word lengths up to 29")
        return np.int32
    raise ValueError("cell_bits must be 32 or 64")


def _step(store: LevelStore, rows: int, grow: bool):
    V = np.empty(rows, dtype=np.int64)
    var = np.empty(rows, dtype=np.int64)
    mean = np.empty(rows, dtype=np.int64)
    nxt = None
    if grow:
        shape = (2 * rows, store.A.shape[1])
        An = np.empty(shape, dtype=store.A.dtype)
        Bn = np.empty(shape, dtype=store.A.dtype)
        kernels.advance(store.A, store.B, V, var, mean, rows, store.center, An, Bn)
        nxt = LevelStore(store.level + 1, An, Bn, store.center)
    else:
        kernels.advance(store.A, store.B, V, var, mean, rows, store.center)
    if mean.any():
        bad = int(np.flatnonzero(mean)[0])
        raise ArithmeticError(f"nonzero mean at level {store.level}, row {bad}")
    return V, var, nxt


def _expand_block(A, B, level, center, b_max, last_rows, force_python=False):
    """Run one block of rows from ``level`` down to ``b_max``.

    ``last_rows`` is how many of the block's rows at ``b_max`` lie below K.
    """
    if force_python:
        kernels.advance = kernels.python_advance
    store = LevelStore(level, A, B, center)
    out = []
    peak = store.nbytes
    for b in range(level, b_max + 1):
        rows = store.A.shape[0] if b < b_max else last_rows
        V, var, nxt = _step(store, rows, b < b_max)
        if nxt is not None:
            peak = max(peak, store.nbytes + nxt.nbytes)
        out.append((V, var))
        store = nxt
    return out, peak


def _estimate(K: int, width: int, itemsize: int, split_rows: int, block_bytes: int) -> dict[int, int]:
    """Approximate peak bytes by level: pairs of two adjacent levels plus results so far."""
    results = 0
    per_level = {}
    for b in range(2, K.bit_length() + 1):
        rows = min(1 << (b - 2), split_rows)
        results += 16 * level_rows(b, K)
        pairs = 3 * 2 * rows * width * itemsize
        per_level[b] = pairs + block_bytes + results
    return per_level


def scan(K: int, options: ScanOptions | None = None, *, resume_from=None,
         progress=None) -> ScanResult:
    """Compute ``V(t)`` and the variance of ``P_t`` for every odd ``3 <= t <= K``.

    With ``options.checkpoint_path`` and ``options.checkpoint_level`` set,
    the state after that bit-length level is written to disk; ``resume_from``
    continues from such a file.  ``progress(level, rows_done)`` is called as
    work completes.
    """
    opts = options or ScanOptions()
    if K < 3:
        raise ValueError("K must be at least 3")
    if K > MAX_K:
        raise ValueError("K must be below 2**56")
    b_max = max(b for b in range(2, K.bit_length() + 1) if level_rows(b, K) > 0)
    n_max = b_max - 2
    width = 2 * n_max + 3
    dtype = _cell_dtype(opts.cell_bits, n_max)
    itemsize = np.dtype(dtype).itemsize
    workers = opts.resolved_workers()
    budget = opts.resolved_budget()
    if budget is not None:
        for b, need in _estimate(K, width, itemsize, opts.split_rows, opts.block_bytes).items():
            if need > budget:
                raise MemoryBudgetExceeded(b, need, budget)
    ck_level = opts.checkpoint_level
    if ck_level is not None and opts.checkpoint_path is None:
        raise ValueError("checkpoint_level needs checkpoint_path")

    result = ScanResult(K, backend=kernels.BACKEND)
    if resume_from is not None:
        store, done = resume(resume_from)
        if store.level > b_max:
            raise CheckpointError(f"checkpoint is past the last level for K={K}")
        store = store.recentered(width, dtype)
        for b in done.levels:
            if b < store.level:
                result.V_num[b] = done.V_num[b]
                result.var_num[b] = done.var_num[b]
    else:
        store = LevelStore.root(width, dtype)
    peak = store.nbytes

    # Whole-level phase: while the frontier is narrow, and through the checkpoint level.
    while True:
        b = store.level
        pending_ck = ck_level is not None and b <= ck_level
        if store.A.shape[0] >= opts.split_rows and not pending_ck:
            break
        rows = level_rows(b, K)
        V, var, nxt = _step(store, rows, b < b_max)
        result.V_num[b], result.var_num[b] = V, var
        if nxt is not None:
            peak = max(peak, store.nbytes + nxt.nbytes)
        if progress:
            progress(b, rows)
        if ck_level is not None and b == ck_level:
            checkpoint(store, result, opts.checkpoint_path)
        if nxt is None:
            result.peak_bytes = peak + _result_bytes(result)
            return result
        store = nxt

    # Block phase: consecutive frontier rows expand independently.
    b0 = store.level
    depth = b_max - b0
    n0 = store.A.shape[0]
    per_row = (3 * 2 * width * itemsize) << depth
    block = 1
    while block < n0 and 2 * block * per_row <= opts.block_bytes:
        block *= 2
    last_rows = level_rows(b_max, K)
    for b in range(b0, b_max + 1):
        result.V_num[b] = np.zeros(level_rows(b, K), dtype=np.int64)
        result.var_num[b] = np.zeros(level_rows(b, K), dtype=np.int64)

    def place(s, out):
        for k, (V, var) in enumerate(out):
            lo = s << k
            result.V_num[b0 + k][lo : lo + len(V)] = V
            result.var_num[b0 + k][lo : lo + len(var)] = var

    tasks = []
    for s in range(0, n0, block):
        e = min(s + block, n0)
        owned = min(max(0, last_rows - (s << depth)), (e - s) << depth)
        tasks.append((s, e, owned))
    log.debug("block phase from level %d: %d blocks of %d rows, %d workers",
              b0, len(tasks), block, workers)
    force_python = kernels.BACKEND != "cython"
    if workers == 1 or len(tasks) == 1:
        for s, e, owned in tasks:
            out, pk = _expand_block(store.A[s:e], store.B[s:e], b0, store.center, b_max, owned)
            peak = max(peak, pk)
            place(s, out)
            if progress:
                progress(b_max, s + ((e - s) << depth) if depth else e)
    else:
        with ProcessPoolExecutor(workers) as ex:
            futs = [
                (s, e, ex.submit(_expand_block, store.A[s:e], store.B[s:e], b0,
                                 store.center, b_max, owned, force_python))
                for s, e, owned in tasks
            ]
            for s, e, f in futs:
                out, pk = f.result()
                peak = max(peak, pk)
                place(s, out)
                if progress:
                    progress(b_max, e << depth)
    result.peak_bytes = peak + _result_bytes(result)
    return result


def _result_bytes(result: ScanResult) -> int:
    return sum(v.nbytes for v in result.V_num.values()) + sum(
        v.nbytes for v in result.var_num.values()
    )


# -- reports -----------------------------------------------------------------


@dataclass
class CheckReport:
    name: str
    checked: int
    violations: list[int]

    @property
    def ok(self) -> bool:
        return not self.violations

    def to_json_obj(self) -> dict:
        return {
            "check": self.name,
            "checked": self.checked,
            "violations": len(self.violations),
            "examples": self.violations[:20],
        }


def _as_records(records) -> Iterable[ScanRecord]:
    return records.records() if isinstance(records, ScanResult) else records


def find_minimizers(records: ScanResult | Iterable[ScanRecord]) -> list[int]:
    """Sorted odd ``t`` with ``V(t) = 1/2``."""
    if isinstance(records, ScanResult):
        return records.minimizers()
    return sorted(r.t for r in records if r.is_minimizer)


def assert_median(records: ScanResult | Iterable[ScanRecord]) -> CheckReport:
    """Count ``t`` with ``V(t) < 1/2``."""
    if isinstance(records, ScanResult):
        bad: list[int] = []
        for b in records.levels:
            mask = 2 * records.V_num[b] < (1 << (b - 1))
            bad.extend(records.t_values(b)[mask].tolist())
        return CheckReport("median", records.count, bad)
    checked = 0
    bad = []
    for r in records:
        checked += 1
        if r.V < Fraction(1, 2):
            bad.append(r.t)
    return CheckReport("median", checked, bad)


def assert_asymmetry(records: ScanResult | Iterable[ScanRecord]) -> CheckReport:
    """Count words starting with L whose ``V(t)`` is not above 1/2."""
    if isinstance(records, ScanResult):
        bad = []
        checked = 0
        for b in records.levels:
            if b < 3:
                continue
            t = records.t_values(b)
            first_l = ((t >> (b - 2)) & 1) == 0
            checked += int(first_l.sum())
            mask = first_l & (2 * records.V_num[b] <= (1 << (b - 1)))
            bad.extend(t[mask].tolist())
        return CheckReport("asymmetry", checked, bad)
    checked = 0
    bad = []
    for r in records:
        if r.first_letter == "L":
            checked += 1
            if r.V <= Fraction(1, 2):
                bad.append(r.t)
    return CheckReport("asymmetry", checked, bad)


def table_rows(minimizers: Iterable[int]) -> list[tuple[int, int, str]]:
    """``(word length, t, word)`` rows, sorted by ``t``."""
    rows = []
    for t in sorted(set(minimizers)):
        w = odd_to_word(t)
        rows.append((len(w), t, str(w)))
    return rows


def emit_table(minimizers: Iterable[int], fmt: str = "csv", dest=None) -> str:
    """Render the minimizer table; write it to ``dest`` (path or file) if given."""
    rows = table_rows(minimizers)
    if fmt == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["length", "t", "word"])
        w.writerows(rows)
        text = buf.getvalue()
    elif fmt == "json":
        text = json.dumps(
            [{"length": n, "t": t, "word": word} for n, t, word in rows], indent=1
        ) + "\n"
    else:
        raise ValueError(f"unknown format {fmt!r}")
    if dest is not None:
        if hasattr(dest, "write"):
            dest.write(text)
        else:
            Path(dest).write_text(text)
    return text


# -- checkpoints -------------------------------------------------------------


def _digest(arrays: dict[str, np.ndarray]) -> str:
    h = hashlib.sha256()
    for name in sorted(arrays):
        a = np.ascontiguousarray(arrays[name])
        h.update(name.encode())
        h.update(str(a.dtype).encode())
        h.update(str(a.shape).encode())
        h.update(a.tobytes())
    return h.hexdigest()


def checkpoint(store: LevelStore, result: ScanResult, path) -> None:
    """Save the frontier of ``store.level`` and all records through that level.

    Resuming recomputes ``store.level`` from its pairs and carries on.
    """
    arrays = {"A": store.A, "B": store.B}
    for b in result.levels:
        if b <= store.level:
            arrays[f"V_{b}"] = result.V_num[b]
            arrays[f"var_{b}"] = result.var_num[b]
    header = {
        "version": CHECKPOINT_VERSION,
        "K": result.K,
        "level": store.level,
        "center": store.center,
        "sha256": _digest(arrays),
    }
    with open(path, "wb") as fh:
        np.savez(fh, header=np.frombuffer(json.dumps(header).encode(), dtype=np.uint8), **arrays)


def read_checkpoint_header(path) -> dict:
    with np.load(path) as data:
        return json.loads(bytes(data["header"]).decode())


def resume(path) -> tuple[LevelStore, ScanResult]:
    """Load a checkpoint; raises :class:`CheckpointError` if it is damaged or foreign."""
    try:
        data = np.load(path)
    except Exception as exc:  # noqa: BLE001 - numpy raises several types here
        raise CheckpointError(f"cannot read checkpoint {path}: {exc}") from exc
    with data:
        try:
            header = json.loads(bytes(data["header"]).decode())
        except (KeyError, ValueError) as exc:
            raise CheckpointError("checkpoint header is missing or corrupt") from exc
        if header.get("version") != CHECKPOINT_VERSION:
            raise CheckpointError(
                f"checkpoint version {header.get('version')!r} != {CHECKPOINT_VERSION!r}"
            )
        arrays = {k: data[k] for k in data.files if k != "header"}
    if _digest(arrays) != header["sha256"]:
        raise CheckpointError("checkpoint checksum mismatch")
    level = header["level"]
    store = LevelStore(level, arrays["A"], arrays["B"], header["center"])
    done = ScanResult(header["K"])
    for name, a in arrays.items():
        if name.startswith("V_"):
            b = int(name[2:])
            done.V_num[b] = a
            done.var_num[b] = arrays[f"var_{b}"]
    return store, done
