"""Analytic capacity bounds for non-coherent fading networks.

The achievable side layers one log-uniform power level per chain member and
lower-bounds each level's rate with a scalar formula whose only channel
inputs are the witness entry's statistics and a pessimistic interference
variance.  The converse side upper-bounds each decomposition phase with a
duality argument whose dominant term is log log of the power budget.  Both
sides are exact finite-SNR formulas, in nats, so they can be compared point
by point against Monte Carlo estimates.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy import special

from .fading import FadingModel, log_h_squared_mean
from .powerchain import PowerChain, decompose, longest_chain, validate_chain
from .topology import Topology

__all__ = [
    "AllocationInfeasibleError",
    "PowerAllocation",
    "BoundReport",
    "min_valid_snr",
    "allocation",
    "effective_noise_variance",
    "scalar_mi_lower_bound",
    "interference_penalty",
    "scheme_rate_lower_bound",
    "alpha_penalty",
    "duality_upper_bound",
    "converse_envelope",
    "converse_envelope_report",
]

_LOG_PI = math.log(math.pi)
_LOG_PI_E = math.log(math.pi) + 1.0


class AllocationInfeasibleError(ValueError):
    """Raised when the power budget is below the layered-scheme threshold."""

    def __init__(self, snr: float, kappa: int, threshold: float):
        super().__init__(
            f"budget {snr:g} below the {kappa}-level feasibility threshold {threshold:g}"
        )
        self.snr = snr
        self.kappa = kappa
        self.threshold = threshold


@dataclass(frozen=True)
class PowerAllocation:
    """Nested magnitude windows, one per chain level, strongest first.

    ``levels[k]`` is the (x_min, x_max) magnitude window of level k+1.  The
    windows produced by :func:`allocation` are strictly nested with gaps, so
    a receiver can sort the levels by received magnitude alone.
    """

    snr_budget: float
    levels: tuple[tuple[float, float], ...]

    def __post_init__(self) -> None:
        if self.snr_budget < 0:
            raise ValueError("power budget must be non-negative")
        for x_min, x_max in self.levels:
            if not (0 < x_min <= x_max):
                raise ValueError(f"level window ({x_min:g}, {x_max:g}) is not ordered")

    @property
    def kappa(self) -> int:
        return len(self.levels)

    def separation_ratios(self) -> tuple[float, ...]:
        """Per level, x_min^2 over the largest x_max^2 of the weaker levels."""
        out = []
        for k in range(self.kappa - 1):
            x_min = self.levels[k][0]
            strongest_below = max(x_max for _, x_max in self.levels[k + 1 :])
            out.append((x_min / strongest_below) ** 2)
        return tuple(out)

    def log_spread(self, nu: int) -> float:
        """log(x_max^2 / x_min^2) of level ``nu`` (1-based), overflow-safe."""
        x_min, x_max = self.levels[nu - 1]
        return 2.0 * (math.log(x_max) - math.log(x_min))


def min_valid_snr(kappa: int) -> float:
    """Smallest budget above which the layered allocation is well ordered.

    The binding constraint sits at the weakest level: with u = log E and
    k = kappa*(kappa+1) it reads exp(u/k) > u.  For kappa = 1 that holds for
    every E > 1, so e is reported as a safe floor; otherwise the threshold is
    the upper root of exp(u/k) = u, found by bisection on the monotone tail.
    """
    if kappa < 1:
        raise ValueError("kappa must be at least 1")
    k = float(kappa * (kappa + 1))
    u_turn = k * math.log(k)  # exp(u/k) - u is decreasing before, increasing after
    if math.exp(u_turn / k) - u_turn > 0:
        return math.e
    lo, hi = u_turn, 2.0 * u_turn
    while math.exp(hi / k) - hi <= 0:
        hi *= 2.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if math.exp(mid / k) - mid > 0:
            hi = mid
        else:
            lo = mid
        if hi - lo <= 1e-12 * hi:
            break
    return max(math.exp(hi), math.e)


def allocation(snr: float, kappa: int) -> PowerAllocation:
    """Layered magnitude windows for a ``kappa``-level scheme at budget ``snr``.

    Level nu spans magnitudes from E^(1/(nu+1)) * log E up to E^(1/nu); the
    log E factor opens a multiplicative guard gap of (log E)^2 in squared
    magnitude between consecutive levels.

    Raises:
        AllocationInfeasibleError: below :func:`min_valid_snr`, where the
            weakest window would be empty.  The error carries the threshold.
    """
    threshold = min_valid_snr(kappa)
    if snr < threshold:
        raise AllocationInfeasibleError(snr, kappa, threshold)
    log_e = math.log(snr)
    levels = []
    for nu in range(1, kappa + 1):
        x_max = snr ** (1.0 / nu)
        x_min = snr ** (1.0 / (nu + 1)) * log_e
        if not x_min < x_max:
            raise AllocationInfeasibleError(snr, kappa, threshold)
        levels.append((x_min, x_max))
    return PowerAllocation(snr_budget=snr, levels=tuple(levels))


def effective_noise_variance(nu: int, alloc: PowerAllocation, frob2: float) -> float:
    """Worst-case variance of noise plus weaker-level interference at level nu.

    Uses the budget of every weaker level at full strength and the whole
    matrix's second moment, so it is valid for any topology; the weakest
    level sees thermal noise only.
    """
    _check_level(nu, alloc)
    if frob2 <= 0:
        raise ValueError("frob2 must be positive")
    if nu == alloc.kappa:
        return 1.0
    strongest_below = max(x_max for _, x_max in alloc.levels[nu:])
    return 1.0 + frob2 * (alloc.kappa - nu) * strongest_below**2


def scalar_mi_lower_bound(
    x_min: float, x_max: float, sigma_h: float, sigma_w: float, e_log_h2: float
) -> float:
    """Rate guarantee (nats) of one scalar fading channel with a log-uniform
    magnitude input on [x_min, x_max].

        log log(x_max^2/x_min^2) + log pi + E[log|H|^2]
            - log(pi e (sigma_h + sigma_w / x_min)^2)

    ``sigma_h`` and ``sigma_w`` are standard deviations of the fading entry
    and of the additive noise.  As sigma_w -> 0 with sigma_h = 1 the last two
    corrections collapse to -1 nat.
    """
    if not 0 < x_min < x_max:
        raise ValueError("need 0 < x_min < x_max (degenerate window has no spread)")
    if sigma_h <= 0 or sigma_w < 0:
        raise ValueError("sigma_h must be positive and sigma_w non-negative")
    spread = 2.0 * (math.log(x_max) - math.log(x_min))
    return (
        math.log(spread)
        + _LOG_PI
        + e_log_h2
        - (_LOG_PI_E + 2.0 * math.log(sigma_h + sigma_w / x_min))
    )


def interference_penalty(
    nu: int, alloc: PowerAllocation, frob2: float, eps2: float
) -> float:
    """Rate cost (nats) of decoding level nu without knowing the weaker levels.

    The numerator is the worst-case weaker-level power; the denominator is
    the useful signal floor, scaled by ``eps2``, the conditional variance of
    the witness entry given the interfering entries of the same row.  Zero at
    the weakest level, and shrinking like 1/(log E)^2 as the budget grows.
    """
    _check_level(nu, alloc)
    if eps2 <= 0:
        raise ValueError("eps2 must be positive")
    if nu == alloc.kappa:
        return 0.0
    x_min = alloc.levels[nu - 1][0]
    strongest_below = max(x_max for _, x_max in alloc.levels[nu:])
    interference = frob2 * (alloc.kappa - nu) * strongest_below**2
    return math.log1p(interference / (1.0 + eps2 * x_min**2))


def _check_level(nu: int, alloc: PowerAllocation) -> None:
    if not 1 <= nu <= alloc.kappa:
        raise ValueError(f"level {nu} out of range 1..{alloc.kappa}")


@dataclass(frozen=True)
class BoundReport:
    """Evaluated bounds at one power budget.

    ``per_level_terms`` pairs each level's scalar rate guarantee with its
    interference penalty.  ``upper_bound`` is None until a converse value is
    attached.  ``constants`` keeps the raw ingredients for inspection.
    """

    snr: float
    kappa: int
    loglog_term: float
    lower_bound: float
    upper_bound: float | None
    per_level_terms: tuple[tuple[float, float], ...]
    constants: dict

    def to_json_dict(self) -> dict:
        return {
            "snr": self.snr,
            "kappa": self.kappa,
            "loglog_term": self.loglog_term,
            "lower_bound": self.lower_bound,
            "upper_bound": self.upper_bound,
            "per_level_terms": [list(pair) for pair in self.per_level_terms],
            "constants": self.constants,
        }


def scheme_rate_lower_bound(
    topo: Topology, chain: PowerChain, model: FadingModel, snr: float
) -> BoundReport:
    """Total rate guarantee of the layered scheme riding the given chain.

    Each chain member transmits one level of the allocation and is decoded by
    its witness receiver alone, with every weaker level treated as noise at
    its worst-case variance.  The report sums the per-level guarantees; the
    interference penalties are reported alongside, not subtracted, since the
    guarantee already prices interference into its noise term.
    """
    validate_chain(topo, chain)
    kappa = len(chain)
    if kappa == 0:
        raise ValueError("chain must have at least one member")
    alloc = allocation(snr, kappa)
    frob2 = model.frob_second_moment
    terms = []
    level_details = []
    for nu in range(1, kappa + 1):
        t = chain.transmitters[nu - 1]
        r = chain.witnesses[nu - 1]
        x_min, x_max = alloc.levels[nu - 1]
        variance = model.entry_variance(r, t)
        e_log_h2 = log_h_squared_mean(model.entry_mean(r, t), variance)
        sigma_w = math.sqrt(effective_noise_variance(nu, alloc, frob2))
        term = scalar_mi_lower_bound(x_min, x_max, math.sqrt(variance), sigma_w, e_log_h2)
        interferers = [
            (r, chain.transmitters[eta - 1])
            for eta in range(nu + 1, kappa + 1)
            if (r, chain.transmitters[eta - 1]) not in topo.zeros
        ]
        eps2 = model.conditional_variance((r, t), interferers)
        penalty = interference_penalty(nu, alloc, frob2, eps2)
        terms.append((term, penalty))
        level_details.append(
            {
                "level": nu,
                "transmitter": t,
                "witness": r,
                "x_min": x_min,
                "x_max": x_max,
                "sigma_h": math.sqrt(variance),
                "sigma_w": sigma_w,
                "e_log_h2": e_log_h2,
                "eps2": eps2,
                "rate_term": term,
                "interference_penalty": penalty,
            }
        )
    lower = float(sum(term for term, _ in terms))
    return BoundReport(
        snr=snr,
        kappa=kappa,
        loglog_term=kappa * math.log(math.log(snr)),
        lower_bound=lower,
        upper_bound=None,
        per_level_terms=tuple(terms),
        constants={"frob_second_moment": frob2, "levels": level_details},
    )


def alpha_penalty(alpha: float) -> float:
    """log Gamma(alpha) - alpha log alpha, the free part of the duality bound."""
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    return float(special.gammaln(alpha) - alpha * math.log(alpha))


def duality_upper_bound(
    topo: Topology,
    model: FadingModel,
    snr: float,
    *,
    t_star: int | None = None,
    receivers: Sequence[int] | None = None,
    transmitters: Sequence[int] | None = None,
) -> float:
    """Upper bound (nats) on the information one block can convey at budget ``snr``.

    Applies to a block with a dominant transmitter heard by every receiver in
    it; the transmitted vector is assumed to peak on that transmitter.  The
    bound is built from an output-distribution family whose tuning parameter
    is optimised in closed form, leaving a one-dimensional search over the
    dominant magnitude, run by golden section to far below 1e-6 nats.

    Defaults cover the whole topology; pass ``receivers``/``transmitters`` to
    restrict to a sub-block and ``t_star`` to pin the dominant transmitter
    (otherwise the smallest fully heard one is chosen).
    """
    if snr < 0:
        raise ValueError("power budget must be non-negative")
    if not topo.is_pruned:
        raise ValueError("duality bound requires a pruned topology")
    rx = sorted(set(receivers)) if receivers is not None else list(range(1, topo.n_r + 1))
    tx = sorted(set(transmitters)) if transmitters is not None else list(range(1, topo.n_t + 1))
    if not rx or not tx:
        raise ValueError("block needs at least one receiver and transmitter")
    for r in rx:
        topo._check_receiver(r)
    for t in tx:
        topo._check_transmitter(t)
    if t_star is None:
        fully_heard = [t for t in tx if all((r, t) not in topo.zeros for r in rx)]
        if not fully_heard:
            raise ValueError("no transmitter in the block is heard by every receiver")
        t_star = fully_heard[0]
    else:
        if t_star not in tx:
            raise ValueError(f"t_star {t_star} is not in the block")
        if any((r, t_star) in topo.zeros for r in rx):
            raise ValueError(f"t_star {t_star} is not heard by every receiver in the block")

    n_r = len(rx)
    n_t = len(tx)
    block_entries = [(r, t) for r in rx for t in tx if (r, t) not in topo.zeros]
    frob2 = sum(
        abs(model.entry_mean(r, t)) ** 2 + model.entry_variance(r, t)
        for r, t in block_entries
    )
    targets = [(r, t_star) for r in rx]
    given = [(r, t) for r, t in block_entries if t != t_star]
    cond = model.conditional_covariance(targets, given)
    try:
        chol = np.linalg.cholesky(cond)
    except np.linalg.LinAlgError as exc:
        raise ValueError("conditional covariance of the dominant column is singular") from exc
    logdet = 2.0 * float(np.sum(np.log(np.real(np.diagonal(chol)))))
    h_cond = n_r * _LOG_PI_E + logdet

    log_a = math.log(frob2 * n_t)
    log_nr = math.log(n_r)

    def gain(log_rho: float) -> float:
        # output-energy growth minus the larger of two conditional-entropy floors
        out = n_r * np.logaddexp(log_a + log_rho, log_nr)
        floor = max(n_r * _LOG_PI_E, n_r * log_rho + h_cond)
        return float(out) - floor

    switch = _LOG_PI_E - h_cond / n_r  # where the two floors cross
    sup_term = _golden_max(gain, switch - 60.0, switch + 60.0)

    log_energy = log_nr if snr == 0 else float(np.logaddexp(math.log(frob2) + math.log(snr), log_nr))
    delta = 1.0 + log_energy - float(special.digamma(n_r))
    alpha = 1.0 / delta
    return n_r * _LOG_PI - float(special.gammaln(n_r)) + sup_term + 1.0 + alpha_penalty(alpha)


def _golden_max(f, lo: float, hi: float, *, tol: float = 1e-10) -> float:
    inv_phi = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c = b - inv_phi * (b - a)
    d = a + inv_phi * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol:
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - inv_phi * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + inv_phi * (b - a)
            fd = f(d)
    return max(f(0.5 * (a + b)), fc, fd)


def converse_envelope_report(topo: Topology, model: FadingModel, snr: float) -> dict:
    """Converse upper envelope with its breakdown, for the identity ordering.

    Phase nu of the identity-ordering decomposition is bounded by
    :func:`duality_upper_bound` on the block of its receiver group against
    all not-yet-decoded transmitters; the cross-phase coupling of the fading
    matrix is priced by block mutual informations, and the receiver's freedom
    to re-sort the transmitters costs at most log n_t!.  The headline shape is
    kappa_star * log(1 + log(1 + E)) plus everything else folded into a
    bounded constant.
    """
    from .fading import block_mutual_information  # local import to keep module load light

    if not topo.is_pruned:
        raise ValueError("converse envelope requires a pruned topology")
    decomp = decompose(topo, tuple(range(1, topo.n_t + 1)))
    kappa_star, _ = longest_chain(topo)
    loglog = math.log1p(math.log1p(snr))

    remaining: list[set[int]] = []
    tail: set[int] = set()
    for block in reversed(decomp.transmitter_blocks):
        tail = tail | set(block)
        remaining.append(set(tail))
    remaining.reverse()

    per_phase = []
    cross_terms = []
    for k in range(decomp.kappa):
        rx = sorted(decomp.receiver_blocks[k])
        tx = sorted(remaining[k])
        per_phase.append(
            duality_upper_bound(
                topo,
                model,
                snr,
                t_star=decomp.chain.transmitters[k],
                receivers=rx,
                transmitters=tx,
            )
        )
        if k < decomp.kappa - 1:
            later_rx = set().union(*decomp.receiver_blocks[k + 1 :])
            a = [(r, t) for r in rx for t in tx if (r, t) not in topo.zeros]
            b = [(r, t) for r in sorted(later_rx) for t in tx if (r, t) not in topo.zeros]
            cross_terms.append(block_mutual_information(model, a, b))

    log_perm = float(special.gammaln(topo.n_t + 1))
    constant = sum(u - loglog for u in per_phase) + sum(cross_terms) + log_perm
    return {
        "snr": snr,
        "kappa_star": kappa_star,
        "loglog_term": kappa_star * loglog,
        "constant": constant,
        "per_phase_upper": per_phase,
        "cross_block_mi": cross_terms,
        "log_permutation_count": log_perm,
        "value": kappa_star * loglog + constant,
    }


def converse_envelope(topo: Topology, model: FadingModel, snr: float) -> float:
    """Converse upper envelope (nats); see :func:`converse_envelope_report`."""
    return float(converse_envelope_report(topo, model, snr)["value"])
