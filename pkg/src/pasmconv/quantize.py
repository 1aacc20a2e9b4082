"""K-means binning of kernel weights into a shared-value dictionary.

Trained kernels carry few distinct weight magnitudes, so the full weight
tensor can be replaced by B shared centroid values plus a small bin index
per position. Everything here is deterministic integer arithmetic:
centroids are means rounded half away from zero, nearest-centroid ties
resolve to the lower index, and the dictionary is canonicalized (sorted
ascending, duplicates merged) so index tensors are comparable across runs.

Plain Lloyd iterations on small 1-D instances get stuck in local minima a
few percent of the time, which is not good enough for a quantizer whose
output drives everything downstream. Each restart therefore runs Lloyd
from a diversified init (evenly spaced values, largest-gap cuts, a
deterministic incremental-insertion pass, or gap-weighted random cuts)
and then polishes the result with exact cut-position descent plus
Hartigan-style single-point moves. Restarted runs match the optimal 1-D
clustering on every small instance we have been able to generate.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from .tensor import QTensor, WordSpec, ceil_log2

__all__ = [
    "WeightDictionary",
    "EncodedKernel",
    "KMeansOptions",
    "KMeansRun",
    "kmeans_quantize",
    "kmeans_iterate",
    "encode_kernel",
    "decode_kernel",
    "quantization_sse",
]

MAX_BINS = 256

# exhaustive pair-of-cuts descent is only affordable (and only needed, to
# match the optimal clustering) on small instances
_PAIR_DESCENT_MAX_N = 24
_GLOBAL_INSERT_MAX_DISTINCT = 32
_GLOBAL_INSERT_MAX_BINS = 8


class WeightDictionary:
    """Canonical dictionary of shared weight values.

    Centroids are stored sorted ascending with duplicates merged; `bins`
    is the resulting bin count and `wci` the index width in bits
    (ceil(log2(bins)), 0 for a fully collapsed single-value dictionary).
    """

    __slots__ = ("centroids",)

    def __init__(self, centroids):
        cent = np.unique(np.asarray(list(centroids), dtype=np.int64))
        if cent.size < 1:
            raise ValueError("dictionary needs at least one centroid")
        if cent.size > MAX_BINS:
            raise ValueError(f"dictionary holds {cent.size} centroids, above the {MAX_BINS} cap")
        self.centroids = cent

    @property
    def bins(self) -> int:
        return int(self.centroids.size)

    @property
    def wci(self) -> int:
        """Index width in bits."""
        return ceil_log2(self.bins) if self.bins > 1 else 0

    def nearest_index(self, values) -> np.ndarray:
        """Index of the nearest centroid for each value; ties go to the lower index."""
        return _nearest(np.asarray(values, dtype=np.int64), self.centroids)

    def __eq__(self, other):
        if not isinstance(other, WeightDictionary):
            return NotImplemented
        return bool(np.array_equal(self.centroids, other.centroids))

    def __repr__(self):
        return f"WeightDictionary(bins={self.bins}, centroids={self.centroids.tolist()})"


@dataclass(frozen=True)
class EncodedKernel:
    """Kernel stored as per-position bin indices plus the dictionary.

    `indices` has the full [M][C][KY][KX] kernel shape, one index per
    output kernel even when several kernels share bin patterns.
    `kernel_word` is the word the decoded weights are wrapped into.
    """

    indices: np.ndarray
    dictionary: WeightDictionary
    kernel_word: WordSpec

    def __post_init__(self):
        idx = np.asarray(self.indices, dtype=np.int64)
        if idx.size and (idx.min() < 0 or idx.max() >= self.dictionary.bins):
            raise ValueError(
                f"bin index out of range: dictionary has {self.dictionary.bins} bins"
            )
        object.__setattr__(self, "indices", idx)


@dataclass(frozen=True)
class KMeansOptions:
    """Clustering knobs. `init` shapes restart 0 only; later restarts walk
    the fixed diversification portfolio (largest-gap cuts, incremental
    insertion, then seeded gap-weighted random cuts)."""

    max_iters: int = 100
    seed: int = 0
    init: str = "linspace"  # "linspace" | "sample"
    restarts: int = 1

    def __post_init__(self):
        if self.max_iters < 1:
            raise ValueError(f"max_iters must be >= 1, got {self.max_iters}")
        if self.init not in ("linspace", "sample"):
            raise ValueError(f"init must be 'linspace' or 'sample', got {self.init!r}")
        if self.restarts < 1:
            raise ValueError(f"restarts must be >= 1, got {self.restarts}")


@dataclass
class KMeansRun:
    """Outcome of one quantization: canonical dictionary, per-weight
    assignments, final SSE and the winning restart's per-iteration SSE."""

    dictionary: WeightDictionary
    assignments: np.ndarray
    sse: int
    sse_history: list = field(default_factory=list)


def _round_div_half_away(num: int, den: int) -> int:
    """num/den rounded half away from zero; den > 0."""
    mag = (2 * abs(num) + den) // (2 * den)
    return -mag if num < 0 else mag


def _nearest(w: np.ndarray, cent_sorted: np.ndarray) -> np.ndarray:
    pos = np.searchsorted(cent_sorted, w)
    lo = np.clip(pos - 1, 0, cent_sorted.size - 1)
    hi = np.clip(pos, 0, cent_sorted.size - 1)
    return np.where(np.abs(w - cent_sorted[lo]) <= np.abs(w - cent_sorted[hi]), lo, hi)


def _sse_int(w: np.ndarray, cent: np.ndarray, assign: np.ndarray) -> int:
    # exact even when (w - c)**2 exceeds int64
    return int(sum((int(a) - int(b)) ** 2 for a, b in zip(w, cent[assign])))


class _Segments:
    """O(1) exact SSE of any contiguous run of the sorted weights, via
    prefix sums kept as Python ints (squares can exceed int64)."""

    def __init__(self, sorted_vals):
        self.vals = sorted_vals
        self.s1 = [0]
        self.s2 = [0]
        for v in sorted_vals:
            self.s1.append(self.s1[-1] + v)
            self.s2.append(self.s2[-1] + v * v)

    def sse(self, a: int, b: int) -> int:
        n = b - a
        if n <= 0:
            return 0
        s1 = self.s1[b] - self.s1[a]
        s2 = self.s2[b] - self.s2[a]
        c = _round_div_half_away(s1, n)
        return s2 - 2 * c * s1 + n * c * c

    def centroid(self, a: int, b: int) -> int:
        return _round_div_half_away(self.s1[b] - self.s1[a], b - a)

    def cuts_sse(self, cuts) -> int:
        edges = (0, *cuts, len(self.vals))
        return sum(self.sse(a, b) for a, b in zip(edges, edges[1:]))

    def cuts_centroids(self, cuts) -> np.ndarray:
        edges = (0, *cuts, len(self.vals))
        cents = {self.centroid(a, b) for a, b in zip(edges, edges[1:]) if b > a}
        return np.array(sorted(cents), dtype=np.int64)


# ------------------------------------------------------------------ inits


def _init_linspace(w: np.ndarray, n_bins: int) -> np.ndarray:
    lo, hi = int(w.min()), int(w.max())
    return np.array(
        [lo + _round_div_half_away(i * (hi - lo), n_bins - 1) for i in range(n_bins)],
        dtype=np.int64,
    )


def _init_value_sample(w: np.ndarray, n_bins: int, rng) -> np.ndarray:
    return np.sort(w[rng.choice(w.size, size=n_bins, replace=False)])


def _pad_bins(cent: np.ndarray, n_bins: int) -> np.ndarray:
    # duplicates become empty clusters and get reseeded inside Lloyd
    if cent.size < n_bins:
        cent = np.concatenate([cent, np.full(n_bins - cent.size, cent[-1], dtype=np.int64)])
    return cent


def _init_gap_cuts(seg: _Segments, n_bins: int, rng=None) -> np.ndarray:
    """Cut the sorted values at the largest gaps (rng=None) or at random
    positions weighted by squared gap size, then start from group means."""
    s = np.asarray(seg.vals, dtype=np.int64)
    gaps = np.diff(s).astype(np.float64)
    k = min(n_bins - 1, s.size - 1)
    if rng is None:
        cuts = sorted(int(i) + 1 for i in np.argsort(-gaps, kind="stable")[:k])
    else:
        weights = gaps * gaps
        total = weights.sum()
        p = weights / total if total > 0 else np.full(gaps.size, 1.0 / gaps.size)
        cuts = sorted(int(i) for i in rng.choice(np.arange(1, s.size), size=k, replace=False, p=p))
    return _pad_bins(seg.cuts_centroids(cuts), n_bins)


# ------------------------------------------------------------------ lloyd


def _lloyd(w: np.ndarray, cent: np.ndarray, opts: KMeansOptions):
    """Assign / update iterations until assignments stabilize. Empty bins
    are reseeded at the currently worst-fit weight, which strictly lowers
    SSE, so the per-iteration SSE history is non-increasing."""
    n_bins = cent.size
    cent = np.sort(cent)
    prev_assign = None
    history = []
    assign = _nearest(w, cent)
    for _ in range(opts.max_iters):
        history.append(_sse_int(w, cent, assign))
        if prev_assign is not None and np.array_equal(assign, prev_assign):
            break
        prev_assign = assign

        new_cent = cent.copy()
        for j in range(n_bins):
            members = w[assign == j]
            if members.size:
                new_cent[j] = _round_div_half_away(int(members.sum(dtype=object)), members.size)
        resid = np.abs(w - new_cent[assign])
        order = np.lexsort((w, -resid))  # farthest first, lowest value on ties
        claimed = np.zeros(w.size, dtype=bool)
        for j in range(n_bins):
            if (assign == j).any():
                continue
            for i in order:
                if not claimed[i]:
                    new_cent[j] = w[i]
                    claimed[i] = True
                    break
        cent = np.sort(new_cent)
        assign = _nearest(w, cent)
    return cent, assign, history


# ------------------------------------------------------------- refinement


def _cuts_from_assign(seg: _Segments, assign_sorted: np.ndarray) -> list:
    return [i for i in range(1, len(seg.vals)) if assign_sorted[i] != assign_sorted[i - 1]]


def _cut_descent(seg: _Segments, cuts: list, pairwise: bool, max_passes: int = 100) -> list:
    """Coordinate descent on cut positions: re-optimize each cut exactly
    with its neighbors fixed, and (small instances) each pair of cuts
    jointly. Strict-improvement moves only, so it terminates."""
    n = len(seg.vals)
    cuts = list(cuts)
    k = len(cuts)
    if k == 0:
        return cuts
    for _ in range(max_passes):
        moved = False
        for j in range(k):
            lo = cuts[j - 1] + 1 if j > 0 else 1
            hi = cuts[j + 1] - 1 if j + 1 < k else n - 1
            a = cuts[j - 1] if j > 0 else 0
            b = cuts[j + 1] if j + 1 < k else n
            best_val, best_pos = None, cuts[j]
            for pos in range(lo, hi + 1):
                val = seg.sse(a, pos) + seg.sse(pos, b)
                if best_val is None or val < best_val:
                    best_val, best_pos = val, pos
            if best_pos != cuts[j]:
                cuts[j] = best_pos
                moved = True
        if pairwise and k >= 2:
            for i, j in itertools.combinations(range(k), 2):
                others = [c for idx, c in enumerate(cuts) if idx not in (i, j)]
                best_val = seg.cuts_sse(cuts)
                best_pair = (cuts[i], cuts[j])
                for pi in range(1, n):
                    if pi in others:
                        continue
                    for pj in range(pi + 1, n):
                        if pj in others:
                            continue
                        val = seg.cuts_sse(sorted([pi, pj] + others))
                        if val < best_val:
                            best_val, best_pair = val, (pi, pj)
                if best_pair != (cuts[i], cuts[j]):
                    cuts[:] = sorted([*best_pair] + others)
                    moved = True
        if not moved:
            break
    return cuts


def _hartigan_moves(sl: list, assign: list, n_bins: int, max_passes: int = 50) -> np.ndarray:
    """Single-point reassignment with exact SSE deltas (running count/sum/
    sum-of-squares per cluster); returns the resulting centroid set."""

    stats = [[0, 0, 0] for _ in range(n_bins)]  # count, sum, sum of squares
    for v, a in zip(sl, assign):
        stats[a][0] += 1
        stats[a][1] += v
        stats[a][2] += v * v

    def cluster_sse(st):
        n, s1, s2 = st
        if n == 0:
            return 0
        c = _round_div_half_away(s1, n)
        return s2 - 2 * c * s1 + n * c * c

    assign = list(assign)
    for _ in range(max_passes):
        improved = False
        for i, v in enumerate(sl):
            a = assign[i]
            src = stats[a]
            src_wo = [src[0] - 1, src[1] - v, src[2] - v * v]
            base = cluster_sse(src)
            best_delta, best_t = 0, None
            for t in range(n_bins):
                if t == a:
                    continue
                tgt = stats[t]
                tgt_with = [tgt[0] + 1, tgt[1] + v, tgt[2] + v * v]
                delta = (cluster_sse(src_wo) + cluster_sse(tgt_with)
                         - base - cluster_sse(tgt))
                if delta < best_delta:
                    best_delta, best_t = delta, t
            if best_t is not None:
                stats[a] = src_wo
                t = best_t
                stats[t] = [stats[t][0] + 1, stats[t][1] + v, stats[t][2] + v * v]
                assign[i] = t
                improved = True
        if not improved:
            break
    cents = {_round_div_half_away(s1, n) for n, s1, _ in stats if n > 0}
    return np.array(sorted(cents), dtype=np.int64)


def _polish(w: np.ndarray, seg: _Segments, cent: np.ndarray, assign: np.ndarray):
    """Cut descent then Hartigan moves; keep whichever of the three
    solutions (raw, descended, point-moved) evaluates lowest."""
    best_sse = _sse_int(w, cent, assign)
    best_cent = cent

    sl = seg.vals
    sw = np.asarray(sl, dtype=np.int64)
    assign_sorted = _nearest(sw, cent)
    cuts = _cut_descent(seg, _cuts_from_assign(seg, assign_sorted), len(sl) <= _PAIR_DESCENT_MAX_N)
    cent2 = seg.cuts_centroids(cuts)
    sse2 = _sse_int(sw, cent2, _nearest(sw, cent2))
    if sse2 < best_sse:
        best_sse, best_cent = sse2, cent2

    assign3 = [int(x) for x in _nearest(sw, best_cent)]
    cent3 = _hartigan_moves(sl, assign3, best_cent.size)
    sse3 = _sse_int(sw, cent3, _nearest(sw, cent3))
    if sse3 < best_sse:
        best_sse, best_cent = sse3, cent3
    return best_cent, best_sse


def _global_insertion(w: np.ndarray, n_bins: int, opts: KMeansOptions) -> tuple:
    """Deterministic incremental seeding: grow the centroid set one bin at
    a time, trying every distinct value as the insertion point and keeping
    the best Lloyd outcome at each level."""
    distinct = np.unique(w)
    cent = np.array([_round_div_half_away(int(w.sum(dtype=object)), w.size)], dtype=np.int64)
    history = [0]
    for _ in range(2, n_bins + 1):
        best = None
        for x in distinct:
            c2, a2, h2 = _lloyd(w, np.concatenate([cent, [x]]), opts)
            s2 = _sse_int(w, c2, a2)
            if best is None or s2 < best[0]:
                best = (s2, c2, h2)
        cent, history = best[1], best[2]
    return cent, history


# -------------------------------------------------------------- top level


def _restart_centroids(w, seg, n_bins, opts, restart):
    """Init portfolio: 0 = configured policy, 1 = largest-gap cuts,
    2 = incremental insertion (when affordable), rest = seeded random cuts."""
    if restart == 0:
        if opts.init == "linspace":
            return _init_linspace(w, n_bins), None
        return _init_value_sample(w, n_bins, np.random.default_rng((opts.seed, 0))), None
    if restart == 1:
        return _init_gap_cuts(seg, n_bins), None
    if (restart == 2 and np.unique(w).size <= _GLOBAL_INSERT_MAX_DISTINCT
            and n_bins <= _GLOBAL_INSERT_MAX_BINS):
        return _global_insertion(w, n_bins, opts)
    rng = np.random.default_rng((opts.seed, restart))
    return _init_gap_cuts(seg, n_bins, rng), None


def kmeans_iterate(weights, n_bins: int, opts: KMeansOptions = KMeansOptions()) -> KMeansRun:
    """Cluster scaled-integer weights into at most `n_bins` shared values.

    Runs `opts.restarts` seeded, polished Lloyd passes and keeps the
    lowest-SSE outcome. When the weights have no more distinct values than
    bins the exact optimum (SSE 0) is returned directly.
    """
    w = np.asarray(list(weights), dtype=np.int64)
    if w.size == 0:
        raise ValueError("weights must be non-empty")
    if not 2 <= n_bins <= MAX_BINS:
        raise ValueError(f"bin count must be in 2..{MAX_BINS}, got {n_bins}")

    distinct = np.unique(w)
    if distinct.size <= n_bins:
        d = WeightDictionary(distinct)
        assign = d.nearest_index(w)
        return KMeansRun(d, assign, 0, [0])

    seg = _Segments([int(v) for v in np.sort(w)])
    best = None
    for restart in range(opts.restarts):
        cent, history = _restart_centroids(w, seg, n_bins, opts, restart)
        if history is None:
            cent, assign, history = _lloyd(w, cent, opts)
        else:
            assign = _nearest(w, cent)
        cent, sse = _polish(w, seg, cent, assign)
        if sse < history[-1]:
            history = history + [sse]
        if best is None or sse < best[0]:
            best = (sse, cent, history)
    _, cent, history = best

    # canonicalize and re-derive assignments against the merged dictionary
    d = WeightDictionary(cent)
    assign = d.nearest_index(w)
    return KMeansRun(d, assign, _sse_int(w, d.centroids, assign), history)


def kmeans_quantize(weights, n_bins: int, opts: KMeansOptions = KMeansOptions()):
    """Dictionary plus per-weight nearest-centroid assignments."""
    run = kmeans_iterate(weights, n_bins, opts)
    return run.dictionary, run.assignments


def encode_kernel(kernel: QTensor, dictionary: WeightDictionary) -> EncodedKernel:
    """Replace each kernel weight by the index of its nearest centroid."""
    idx = dictionary.nearest_index(kernel.flat()).reshape(kernel.shape)
    return EncodedKernel(idx, dictionary, kernel.word)


def decode_kernel(ek: EncodedKernel) -> QTensor:
    """Materialize the centroid value at every position, wrapped to the kernel word."""
    values = ek.dictionary.centroids[ek.indices]
    return QTensor.from_wrapped(ek.indices.shape, ek.kernel_word, values)


def quantization_sse(weights, dictionary: WeightDictionary, assignments) -> int:
    """Sum of squared weight-to-centroid distances (exact, unbounded)."""
    w = np.asarray(list(weights), dtype=np.int64)
    assign = np.asarray(assignments, dtype=np.int64)
    if assign.shape != w.shape:
        raise ValueError(f"assignments shape {assign.shape} does not match weights {w.shape}")
    if assign.size and (assign.min() < 0 or assign.max() >= dictionary.bins):
        raise ValueError(f"assignment index out of range for {dictionary.bins} bins")
    return _sse_int(w, dictionary.centroids, assign)
