"""Reversible nearest-neighbor dynamics on kbar-subsets under the Gibbs law
pi_beta(S) ~ exp(beta |E[S]|).

The chain is Metropolis with uniform swap proposals (one vertex out, one
in), the simplest member of the reversible nearest-neighbor family on the
Hamming-distance-2 graph of subsets.  Desk-scale instances additionally get
the exact stationary distribution by enumeration, which is what the well
ratios and conditional initial laws are checked against.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import BudgetError, ParameterError
from .model import ModelParams, PlantedGraph, VertexSubset, rng_from_seed
from .landscape import _enum_counts
from .numerics import log_placements

_BLOCK = 1 << 15


@dataclass(frozen=True)
class WellPartition:
    """Overlap bands: A0 = [0, a0_max], A1 = [a1_min, a1_max],
    A2 = [a2_min, k].  Derived from the well constants d1 < d2 in units of
    sqrt(kbar / ln(n/kbar)); a2 starts at floor(k/2)."""

    a0_max: int
    a1_min: int
    a1_max: int
    a2_min: int

    @classmethod
    def from_params(cls, n: int, k: int, kbar: int, d1: float, d2: float) -> "WellPartition":
        if not 0 < d1 < d2:
            raise ParameterError(f"need 0 < d1 < d2, got {d1}, {d2}")
        if kbar >= n:
            raise ParameterError("well scale needs kbar < n")
        s = math.sqrt(kbar / math.log(n / kbar))
        return cls(a0_max=math.floor(d1 * s), a1_min=math.ceil(d1 * s),
                   a1_max=math.ceil(d2 * s), a2_min=k // 2)

    @property
    def valid(self) -> bool:
        return self.a0_max < self.a1_max < self.a2_min


@dataclass(frozen=True)
class MCMCConfig:
    beta: float
    kbar: int
    t_max: int
    seed: int
    d1: float = 0.25
    d2: float = 1.0
    stride: int = 1

    def __post_init__(self):
        if self.beta < 0 or self.t_max < 0 or self.stride < 1:
            raise ParameterError("need beta >= 0, t_max >= 0, stride >= 1")
        if not self.d1 < self.d2:
            raise ParameterError(f"need d1 < d2, got {self.d1}, {self.d2}")


def beta_scale_threshold(n: int, kbar: int) -> float:
    """(ln(n/kbar))^{3/2}: the slow-mixing statements assume beta grows
    beyond this scale.  Advisory only, never enforced."""
    if not 0 < kbar < n:
        raise ParameterError(f"need 0 < kbar < n, got kbar={kbar} n={n}")
    return math.log(n / kbar) ** 1.5


@dataclass
class ChainTrace:
    """(t, overlap, edges) samples at the configured stride, plus the
    hitting record.  hit_time is None when the run timed out (a legitimate,
    censored outcome)."""

    times: list
    overlaps: list
    edges: list
    hit_time: int | None
    final_state: VertexSubset
    t_max: int
    visits: dict | None = field(default=None, repr=False)


def gibbs_log_weight(g: PlantedGraph, s: VertexSubset, beta: float,
                     kbar: int | None = None) -> float:
    """ln pi_beta(s) + ln Z = beta * |E[s]|; the partition function is never
    touched here."""
    if kbar is not None and s.size != kbar:
        raise ParameterError(f"subset size {s.size} != kbar {kbar}")
    if s.members and s.members[-1] >= g.n:
        raise ParameterError("subset out of range")
    return beta * g.count_in_mask(s.mask)


def _swap_delta(g, mask, u, v):
    return ((g.rows[v] & (mask ^ (1 << u))).bit_count()
            - (g.rows[u] & mask).bit_count())


def chain_step(g: PlantedGraph, s: VertexSubset, beta: float,
               rng: np.random.Generator, proposal: tuple[int, int] | None = None) -> VertexSubset:
    """One Metropolis step: propose a uniform (out-vertex u in s, in-vertex
    v not in s) swap, accept with min(1, exp(beta * delta_edges)).

    A forced `proposal` (u, v) skips the proposal draws (used to measure
    acceptance frequencies); the acceptance uniform is always consumed."""
    kbar = s.size
    if kbar >= g.n:
        raise ParameterError("no swap neighbors when kbar = n")
    mask = s.mask
    if proposal is None:
        inside = s.members
        outside = [w for w in range(g.n) if not (mask >> w & 1)]
        u = inside[int(rng.integers(0, kbar))]
        v = outside[int(rng.integers(0, g.n - kbar))]
    else:
        u, v = proposal
        if not (mask >> u & 1) or (mask >> v & 1):
            raise ParameterError(f"proposal ({u}, {v}) is not an (in, out) pair")
    delta = _swap_delta(g, mask, u, v)
    accept = float(rng.random()) < (1.0 if delta >= 0 else math.exp(beta * delta))
    if accept:
        return VertexSubset.from_iterable([w for w in s.members if w != u] + [v])
    return s


def reflected_step(g: PlantedGraph, s: VertexSubset, beta: float,
                   part: WellPartition, rng: np.random.Generator,
                   proposal: tuple[int, int] | None = None) -> VertexSubset:
    """chain_step with proposals that would leave the low-overlap band
    (overlap > a1_max) rejected outright (self-loop before any acceptance
    draw).  The result is reversible for pi_beta conditioned on the band."""
    cur = (s.mask & g.planted_mask).bit_count()
    if cur > part.a1_max:
        raise ParameterError(f"state overlap {cur} already outside the band")
    kbar = s.size
    mask = s.mask
    if proposal is None:
        inside = s.members
        outside = [w for w in range(g.n) if not (mask >> w & 1)]
        u = inside[int(rng.integers(0, kbar))]
        v = outside[int(rng.integers(0, g.n - kbar))]
    else:
        u, v = proposal
    new_overlap = cur - (g.planted_mask >> u & 1) + (g.planted_mask >> v & 1)
    if new_overlap > part.a1_max:
        return s
    delta = _swap_delta(g, mask, u, v)
    accept = float(rng.random()) < (1.0 if delta >= 0 else math.exp(beta * delta))
    if accept:
        return VertexSubset.from_iterable([w for w in s.members if w != u] + [v])
    return s


def run_chain(g: PlantedGraph, cfg: MCMCConfig, init: VertexSubset,
              max_overlap: int | None = None, stop_above: int | None = None,
              count_visits: bool = False) -> ChainTrace:
    """Run the chain for t_max steps (or until overlap exceeds stop_above).

    max_overlap reflects the chain at that overlap (reflected variant);
    stop_above turns the run into a hitting-time measurement.  Randomness is
    drawn in fixed-size blocks from Philox(seed), so identical configs give
    bit-identical traces regardless of stride or stopping."""
    n, kbar = g.n, cfg.kbar
    if init.size != kbar:
        raise ParameterError(f"init size {init.size} != kbar {kbar}")
    if kbar >= n:
        raise ParameterError("no swap neighbors when kbar = n")
    rng = rng_from_seed(cfg.seed)
    rows = g.rows
    pmask = g.planted_mask

    in_list = list(init.members)
    out_list = [v for v in range(n) if v not in set(init.members)]
    mask = init.mask
    edges = g.count_in_mask(mask)
    ov = (mask & pmask).bit_count()

    # acceptance lookup for negative deltas; avoid exp() in the loop
    table = {}
    for d in range(-(kbar), 0):
        table[d] = math.exp(cfg.beta * d)

    times, overlaps_rec, edges_rec = [0], [ov], [edges]
    visits: dict | None = {} if count_visits else None
    hit_time = None
    t = 0
    done = False
    while t < cfg.t_max and not done:
        block = min(_BLOCK, cfg.t_max - t)
        ui = rng.integers(0, kbar, size=block)
        vi = rng.integers(0, n - kbar, size=block)
        uni = rng.random(size=block)
        for i in range(block):
            t += 1
            u = in_list[ui[i]]
            v = out_list[vi[i]]
            pu = pmask >> u & 1
            pv = pmask >> v & 1
            new_ov = ov - pu + pv
            if max_overlap is None or new_ov <= max_overlap:
                m2 = mask ^ (1 << u)
                d = (rows[v] & m2).bit_count() - (rows[u] & mask).bit_count()
                if d >= 0 or uni[i] < table[d]:
                    mask = m2 | (1 << v)
                    in_list[ui[i]] = v
                    out_list[vi[i]] = u
                    edges += d
                    ov = new_ov
            if visits is not None:
                visits[mask] = visits.get(mask, 0) + 1
            if t % cfg.stride == 0:
                times.append(t)
                overlaps_rec.append(ov)
                edges_rec.append(edges)
            if stop_above is not None and ov > stop_above:
                hit_time = t
                if t % cfg.stride:
                    times.append(t)
                    overlaps_rec.append(ov)
                    edges_rec.append(edges)
                done = True
                break
    return ChainTrace(times=times, overlaps=overlaps_rec, edges=edges_rec,
                      hit_time=hit_time, final_state=VertexSubset.from_iterable(in_list),
                      t_max=cfg.t_max, visits=visits)


# --- exact stationary law ----------------------------------------------------


@dataclass
class ExactGibbs:
    """pi_beta by full enumeration of the C(n, kbar) subsets."""

    params: ModelParams
    beta: float
    masks: list
    log_weights: np.ndarray
    overlaps: np.ndarray
    log_z: float

    _index: dict = field(default=None, repr=False)

    def probs(self) -> np.ndarray:
        return np.exp(self.log_weights - self.log_z)

    def prob_of(self, mask: int) -> float:
        if self._index is None:
            self._index = {m: i for i, m in enumerate(self.masks)}
        return float(np.exp(self.log_weights[self._index[mask]] - self.log_z))

    def overlap_marginal(self) -> np.ndarray:
        """Probability mass per overlap value, indexed 0..k."""
        out = np.zeros(self.params.k + 1)
        p = self.probs()
        for z in range(self.params.k + 1):
            sel = self.overlaps == z
            if sel.any():
                out[z] = p[sel].sum()
        return out

    def log_band_mass(self, z_lo: int, z_hi: int) -> float:
        """ln pi(overlap in [z_lo, z_hi]); -inf for an empty band."""
        sel = (self.overlaps >= z_lo) & (self.overlaps <= z_hi)
        if not sel.any():
            return -math.inf
        w = self.log_weights[sel]
        m = float(w.max())
        return m + math.log(float(np.exp(w - m).sum())) - self.log_z

    def well_log_ratio(self, part: WellPartition) -> float:
        """ln( min(pi(A0), pi(A2)) / pi(A1) ); +inf when A1 carries no mass."""
        k = self.params.k
        a0 = self.log_band_mass(0, part.a0_max)
        a1 = self.log_band_mass(part.a1_min, part.a1_max)
        a2 = self.log_band_mass(part.a2_min, k)
        if a1 == -math.inf:
            return math.inf
        return min(a0, a2) - a1

    def sample(self, rng: np.random.Generator, size: int = 1,
               max_overlap: int | None = None) -> list:
        """Masks drawn from pi_beta, optionally conditioned on
        overlap <= max_overlap."""
        w = self.log_weights
        if max_overlap is not None:
            sel = np.nonzero(self.overlaps <= max_overlap)[0]
            if sel.size == 0:
                raise ParameterError(f"no subsets with overlap <= {max_overlap}")
        else:
            sel = np.arange(len(self.masks))
        lw = w[sel]
        p = np.exp(lw - lw.max())
        p /= p.sum()
        picks = rng.choice(sel.size, size=size, p=p)
        return [self.masks[sel[i]] for i in picks]


def exact_gibbs(g: PlantedGraph, kbar: int, beta: float,
                budget: int = 10**7) -> ExactGibbs:
    """Exact Gibbs distribution by enumerating every kbar-subset (explicit
    budget on C(n, kbar)); probabilities sum to 1 up to float roundoff."""
    n = g.n
    total = math.comb(n, kbar)
    if total > budget:
        raise BudgetError(f"C({n},{kbar}) = {total} exceeds budget {budget}")
    masks = []
    weights = np.empty(total)
    overlaps = np.empty(total, dtype=np.int64)
    for i, (mask, count) in enumerate(_enum_counts(g.rows, list(range(n)), kbar, 0, 0, 0)):
        masks.append(mask)
        weights[i] = beta * count
        overlaps[i] = (mask & g.planted_mask).bit_count()
    m = float(weights.max())
    log_z = m + math.log(float(np.exp(weights - m).sum()))
    return ExactGibbs(params=ModelParams(n, g.k, kbar), beta=beta, masks=masks,
                      log_weights=weights, overlaps=overlaps, log_z=log_z)


def free_energy_well_ratio(g: PlantedGraph, kbar: int, beta: float,
                           part: WellPartition, budget: int = 10**7) -> float:
    """ln( min(pi(A0), pi(A2)) / pi(A1) ) from the exact Gibbs law."""
    return exact_gibbs(g, kbar, beta, budget).well_log_ratio(part)


def well_ratio_lower_bound(p: ModelParams, beta: float, part: WellPartition,
                           d_values: dict) -> float:
    """Certified lower bound on the well log-ratio from per-overlap maximal
    edge counts d_values[z] alone: the best single subset of A0/A2 against a
    union bound over A1 (subset counts times their maximal weight)."""
    lo = [beta * d_values[z] for z in d_values if z <= part.a0_max]
    hi = [beta * d_values[z] for z in d_values if z >= part.a2_min]
    mid = [log_placements(p, z) + beta * d_values[z]
           for z in d_values if part.a1_min <= z <= part.a1_max]
    if not mid:
        return math.inf
    if not lo or not hi:
        return -math.inf
    m = max(mid)
    mid_mass = m + math.log(sum(math.exp(x - m) for x in mid))
    return min(max(lo), max(hi)) - mid_mass


def conditional_init(g: PlantedGraph, kbar: int, beta: float, part: WellPartition,
                     seed: int, budget: int = 10**7, burn_in: int | None = None,
                     return_info: bool = False):
    """Sample a start state from pi_beta conditioned on overlap <= a1_max.

    Exact conditional sampling whenever enumeration fits the budget;
    otherwise a reflected-chain burn-in from a uniform low-overlap subset
    (length 200 * n by default, reported via return_info)."""
    rng = rng_from_seed(seed, stream=7)
    try:
        eg = exact_gibbs(g, kbar, beta, budget)
        mask = eg.sample(rng, size=1, max_overlap=part.a1_max)[0]
        out = VertexSubset.from_iterable(
            [v for v in range(g.n) if mask >> v & 1])
        info = {"mode": "exact", "burn_in": 0}
        return (out, info) if return_info else out
    except BudgetError:
        pass
    n = g.n
    non_planted = [v for v in range(n) if not (g.planted_mask >> v & 1)]
    base = min(kbar, len(non_planted))
    members = [non_planted[i] for i in rng.permutation(len(non_planted))[:base]]
    if base < kbar:  # forced planted vertices; stay under the band roof
        need = kbar - base
        if need > part.a1_max:
            raise ParameterError("band cannot hold any kbar-subset")
        members += list(g.planted[:need])
    steps = burn_in if burn_in is not None else 200 * n
    cfg = MCMCConfig(beta=beta, kbar=kbar, t_max=steps, seed=seed ^ 0x5EED,
                     d1=0.25, d2=1.0, stride=max(1, steps))
    trace = run_chain(g, cfg, VertexSubset.from_iterable(members),
                      max_overlap=part.a1_max)
    info = {"mode": "burnin", "burn_in": steps}
    return (trace.final_state, info) if return_info else trace.final_state


def hitting_time(g: PlantedGraph, cfg: MCMCConfig, budget: int = 10**7) -> ChainTrace:
    """Escape time of the low-overlap region: start from the conditional law
    on overlap <= a1_max, run the unrestricted chain until the overlap
    exceeds a1_max or t_max runs out (hit_time None on timeout)."""
    part = WellPartition.from_params(g.n, g.k, cfg.kbar, cfg.d1, cfg.d2)
    init = conditional_init(g, cfg.kbar, cfg.beta, part, seed=cfg.seed, budget=budget)
    return run_chain(g, cfg, init, stop_above=part.a1_max)


def transition_matrix(g: PlantedGraph, kbar: int, beta: float,
                      part: WellPartition | None = None,
                      budget: int = 20000) -> tuple[np.ndarray, list]:
    """Explicit Metropolis transition matrix over all kbar-subsets (desk
    scale only).  With `part`, rows outside the band are dropped and
    band-leaving proposals become self-loops (the reflected chain)."""
    n = g.n
    total = math.comb(n, kbar)
    if total > budget:
        raise BudgetError(f"C({n},{kbar}) = {total} exceeds budget {budget}")
    states = []
    for mask, _ in _enum_counts(g.rows, list(range(n)), kbar, 0, 0, 0):
        if part is None or (mask & g.planted_mask).bit_count() <= part.a1_max:
            states.append(mask)
    index = {m: i for i, m in enumerate(states)}
    prop = 1.0 / (kbar * (n - kbar))
    t = np.zeros((len(states), len(states)))
    for i, mask in enumerate(states):
        ins = [v for v in range(n) if mask >> v & 1]
        outs = [v for v in range(n) if not (mask >> v & 1)]
        for u in ins:
            for v in outs:
                new = (mask ^ (1 << u)) | (1 << v)
                j = index.get(new)
                if j is None:  # outside the band: reflected self-loop
                    continue
                delta = _swap_delta(g, mask, u, v)
                t[i, j] += prop * min(1.0, math.exp(beta * delta))
        t[i, i] = 1.0 - t[i].sum() + t[i, i]
    return t, states
