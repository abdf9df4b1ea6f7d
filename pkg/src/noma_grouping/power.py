"""Decode ordering and coupled power allocation for grouped NOMA downlinks.

Within a group (one BS, one subchannel) the minimum-power superposition
decodes users in ascending order of their channel-coefficient to
interference-plus-noise ratio (CCINR) and allocates

    p_n = (2^r_n - 1) * (1/S_n + sum of powers decoded after n),

with r_n the spectral target rate (bit/s/Hz) and S_n = |H_n|^2/(I_n + s2).
Summing the recursion gives the closed form

    group power = sum_n (2^r_n - 1)/S_n * prod_{i decoded before n} 2^r_i.

Across cells, interference couples the groups that share a subchannel: the
per-channel group powers solve a dense M x M linear system whose entries
depend on the grouping and decode orders but not on the powers themselves.
A fixed-point loop alternates (interference -> CCINR -> orders -> linear
solve) until the orders stop changing, at which point the solve is exact.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .scenario import ChannelGains, Scenario

REL_TOL = 1e-9
ABS_FLOOR_W = 1e-18
MAX_FIXED_POINT_ITERATIONS = 100

# Decode-order rules. CCINR_ORDER is the power-minimizing rule; the other
# two are reference rules used for comparison experiments only.
CCINR_ORDER = "ccinr"
CHANNEL_GAIN_ORDER = "channel_gain"
RATE_DESCENDING_ORDER = "rate_descending"


class InfeasibleSolutionError(RuntimeError):
    """Raised when a caller asks for a quantity of an infeasible solution."""


@dataclass
class Grouping:
    """Per-user (BS, subchannel) assignment; the decision variable.

    bs_of is copied from the scenario association and never changes; only
    channel_of is optimized.
    """

    channel_of: np.ndarray
    bs_of: np.ndarray

    def __post_init__(self):
        self.channel_of = np.asarray(self.channel_of, dtype=np.int64)
        self.bs_of = np.asarray(self.bs_of, dtype=np.int64)
        if self.channel_of.shape != self.bs_of.shape:
            raise ValueError("channel_of and bs_of must have equal length")

    @property
    def num_users(self) -> int:
        return self.channel_of.shape[0]

    def members(self, m: int, g: int) -> list[int]:
        """Users of BS m assigned to subchannel g, ascending id."""
        return [
            int(n)
            for n in np.flatnonzero((self.bs_of == m) & (self.channel_of == g))
        ]

    def members_by_bs(self, g: int, num_bs: int) -> list[list[int]]:
        """Per-BS member lists on subchannel g (ascending ids)."""
        out: list[list[int]] = [[] for _ in range(num_bs)]
        ch = self.channel_of
        bs = self.bs_of
        for n in range(ch.shape[0]):
            if ch[n] == g:
                out[bs[n]].append(n)
        return out

    def with_moves(self, moves) -> "Grouping":
        """New grouping with each (user, target_channel) move applied."""
        ch = self.channel_of.copy()
        for n, g in moves:
            ch[n] = g
        return Grouping(channel_of=ch, bs_of=self.bs_of)

    def key(self) -> tuple:
        """Hashable snapshot of the assignment (for repeat detection)."""
        return tuple(self.channel_of.tolist())


@dataclass
class CcinrTable:
    """Per-user CCINR S_n (1/W) and inter-cell interference I_n (W)."""

    s: np.ndarray
    interference: np.ndarray


@dataclass
class ChannelSystem:
    """Coupling system of one subchannel: a @ P = b.

    a is M x M with -1 on the diagonal and nonnegative couplings off it;
    b is nonpositive (watts).
    """

    a: np.ndarray
    b: np.ndarray


@dataclass
class PowerSolution:
    """Converged allocation for one grouping.

    sic_order maps (bs, channel) to the decode order (first decoded first).
    When feasible is False the remaining fields are not meaningful.
    """

    p: np.ndarray
    group_power: np.ndarray
    ccinr: CcinrTable | None
    sic_order: dict
    feasible: bool
    fixed_point_iterations: int


class ChannelSolveResult(NamedTuple):
    powers: list[float]
    orders: tuple
    iterations: int
    feasible: bool


def spectral_rates(scenario: Scenario) -> np.ndarray:
    return scenario.spectral_rates()


def ccinr(gains: ChannelGains, grouping: Grouping, group_power_table, noise_power_w: float) -> CcinrTable:
    """CCINR table at the given per-group power levels.

    I_n sums, over the other BSs, their gain to user n on n's subchannel
    times their group power on that subchannel. Entries of
    group_power_table must be >= 0.
    """
    lists = gains.as_lists()
    gp = np.asarray(group_power_table, dtype=float).tolist()
    ch = grouping.channel_of.tolist()
    bs = grouping.bs_of.tolist()
    num_bs = len(gp)
    n_users = len(ch)
    s = np.empty(n_users)
    interference = np.empty(n_users)
    for n in range(n_users):
        g = ch[n]
        m = bs[n]
        i_n = 0.0
        for mp in range(num_bs):
            if mp != m:
                i_n += lists[mp][g][n] * gp[mp][g]
        interference[n] = i_n
        s[n] = lists[m][g][n] / (i_n + noise_power_w)
    return CcinrTable(s=s, interference=interference)


def sic_order(group_members, ccinr_table: CcinrTable) -> list[int]:
    """Decode order of one group: ascending CCINR, ties by user id."""
    s = ccinr_table.s
    return sorted(group_members, key=lambda n: (s[n], n))


def group_power_closed_form(group_members, ccinr_table: CcinrTable, rates) -> float:
    """Total group power, closed form over the decode order."""
    s = ccinr_table.s
    order = sorted(group_members, key=lambda n: (s[n], n))
    total = 0.0
    prod = 1.0
    for n in order:
        f = 2.0 ** rates[n]
        total += (f - 1.0) / s[n] * prod
        prod *= f
    return total


def per_user_powers(group_members, ccinr_table: CcinrTable, rates) -> dict[int, float]:
    """Per-user powers of one group via the descending-CCINR recursion."""
    s = ccinr_table.s
    order = sorted(group_members, key=lambda n: (s[n], n))
    powers: dict[int, float] = {}
    acc = 0.0
    for n in reversed(order):
        p_n = (2.0 ** rates[n] - 1.0) * (1.0 / s[n] + acc)
        powers[n] = p_n
        acc += p_n
    return powers


def build_channel_system(
    gains: ChannelGains,
    grouping: Grouping,
    ccinr_table: CcinrTable,
    rates,
    channel: int,
    noise_power_w: float,
    num_bs: int | None = None,
) -> ChannelSystem:
    """Assemble the coupling system of one subchannel.

    Row m accumulates, over BS m's members in decode order, the weight
    w_n = (2^r_n - 1)/|H_own|^2 * prod(earlier 2^r_i); the off-diagonal
    entry (m, m') is sum_n w_n |H_m'|^2 and b_m = -sigma^2 sum_n w_n.
    """
    if num_bs is None:
        num_bs = int(gains.gain.shape[0])
    lists = gains.as_lists()
    s = ccinr_table.s
    a = np.zeros((num_bs, num_bs))
    b = np.zeros(num_bs)
    for m in range(num_bs):
        a[m, m] = -1.0
        order = sorted(grouping.members(m, channel), key=lambda n: (s[n], n))
        prod = 1.0
        wsum = 0.0
        for n in order:
            f = 2.0 ** rates[n]
            w = (f - 1.0) / lists[m][channel][n] * prod
            wsum += w
            for mp in range(num_bs):
                if mp != m:
                    a[m, mp] += w * lists[mp][channel][n]
            prod *= f
        b[m] = -noise_power_w * wsum
    return ChannelSystem(a=a, b=b)


def _lu_solve(a_rows: list, b_vec: list):
    """Dense LU with partial pivoting on nested lists; None if singular."""
    n = len(b_vec)
    a = [row[:] for row in a_rows]
    x = list(b_vec)
    for k in range(n):
        piv = k
        best = abs(a[k][k])
        for i in range(k + 1, n):
            v = abs(a[i][k])
            if v > best:
                best = v
                piv = i
        if best < 1e-300:
            return None
        if piv != k:
            a[k], a[piv] = a[piv], a[k]
            x[k], x[piv] = x[piv], x[k]
        ak = a[k]
        akk = ak[k]
        for i in range(k + 1, n):
            f = a[i][k] / akk
            if f != 0.0:
                ai = a[i]
                for j in range(k + 1, n):
                    ai[j] -= f * ak[j]
                x[i] -= f * x[k]
    for i in range(n - 1, -1, -1):
        ai = a[i]
        acc = x[i]
        for j in range(i + 1, n):
            acc -= ai[j] * x[j]
        x[i] = acc / ai[i]
    return x


def solve_channel_powers(system: ChannelSystem):
    """Solve a @ P = b; returns P (>= 0, finite) or None when infeasible.

    Numerical singularity and negative or non-finite components both mean
    the grouping cannot be powered on this subchannel; neither is an error.
    """
    a = np.asarray(system.a, dtype=float)
    b = np.asarray(system.b, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1] or b.shape != (a.shape[0],):
        raise ValueError("system must be square with a matching vector")
    x = _lu_solve(a.tolist(), b.tolist())
    if x is None:
        return None
    out = np.empty(len(x))
    for i, v in enumerate(x):
        if not math.isfinite(v):
            return None
        if v < 0.0:
            if v < -ABS_FLOOR_W:
                return None
            v = 0.0
        out[i] = v
    return out


def solve_one_channel(
    gain_lists,
    channel: int,
    members_by_bs,
    pow2r,
    sigma2: float,
    order_rule: str = CCINR_ORDER,
    warm_start=None,
) -> ChannelSolveResult:
    """Fixed point of one subchannel: orders and the exact linear solve.

    pow2r[n] = 2 ** spectral_rate[n]. The system matrix depends only on the
    decode orders, so each iteration's solve is exact for its orders and
    the loop converges one iteration after the orders stop changing.
    """
    num_bs = len(members_by_bs)
    rows = [gain_lists[m][channel] for m in range(num_bs)]
    p_cur = list(warm_start) if warm_start is not None else [0.0] * num_bs

    fixed_orders = None
    if order_rule == CHANNEL_GAIN_ORDER:
        fixed_orders = tuple(
            tuple(sorted(mem, key=lambda n, r=rows[m]: (r[n], n)))
            for m, mem in enumerate(members_by_bs)
        )
    elif order_rule == RATE_DESCENDING_ORDER:
        fixed_orders = tuple(
            tuple(sorted(mem, key=lambda n: (-pow2r[n], n)))
            for mem in members_by_bs
        )
    elif order_rule != CCINR_ORDER:
        raise ValueError(f"unknown order rule: {order_rule!r}")

    prev_orders = None
    iterations = 0
    for iterations in range(1, MAX_FIXED_POINT_ITERATIONS + 1):
        if fixed_orders is not None:
            orders = fixed_orders
        else:
            order_list = []
            for m in range(num_bs):
                mem = members_by_bs[m]
                if not mem:
                    order_list.append(())
                    continue
                row = rows[m]
                keyed = []
                for n in mem:
                    i_n = 0.0
                    for mp in range(num_bs):
                        if mp != m:
                            i_n += rows[mp][n] * p_cur[mp]
                    keyed.append((row[n] / (i_n + sigma2), n))
                keyed.sort()
                order_list.append(tuple(n for _, n in keyed))
            orders = tuple(order_list)

        a = [[0.0] * num_bs for _ in range(num_bs)]
        b = [0.0] * num_bs
        for m in range(num_bs):
            a[m][m] = -1.0
            row = rows[m]
            arow = a[m]
            prod = 1.0
            wsum = 0.0
            for n in orders[m]:
                f = pow2r[n]
                w = (f - 1.0) / row[n] * prod
                wsum += w
                for mp in range(num_bs):
                    if mp != m:
                        arow[mp] += w * rows[mp][n]
                prod *= f
            b[m] = -sigma2 * wsum

        if num_bs == 1:
            p_new = [-b[0]]
        else:
            p_new = _lu_solve(a, b)
            if p_new is None:
                return ChannelSolveResult(p_cur, orders, iterations, False)
        for m in range(num_bs):
            v = p_new[m]
            if not math.isfinite(v):
                return ChannelSolveResult(p_cur, orders, iterations, False)
            if v < 0.0:
                if v < -ABS_FLOOR_W:
                    return ChannelSolveResult(p_new, orders, iterations, False)
                p_new[m] = 0.0

        if orders == prev_orders:
            converged = True
            for m in range(num_bs):
                if abs(p_new[m] - p_cur[m]) > REL_TOL * max(abs(p_new[m]), ABS_FLOOR_W):
                    converged = False
                    break
            if converged:
                return ChannelSolveResult(p_new, orders, iterations, True)
        prev_orders = orders
        p_cur = p_new

    return ChannelSolveResult(p_cur, prev_orders, iterations, False)


def solve_all_powers(
    gains: ChannelGains,
    grouping: Grouping,
    scenario: Scenario,
    order_rule: str = CCINR_ORDER,
) -> PowerSolution:
    """Coupled power allocation across all cells and subchannels.

    Subchannels are orthogonal, so each one is solved by its own fixed
    point (started from zero power). Per-user powers are then recovered
    from the converged interference. feasible is False when any channel's
    solve is singular, negative, or fails to converge.
    """
    cfg = scenario.config
    sigma2 = scenario.noise_power_w
    pow2r = np.exp2(scenario.spectral_rates()).tolist()
    lists = gains.as_lists()
    num_bs, num_ch = cfg.num_bs, cfg.num_channels

    group_power = np.zeros((num_bs, num_ch))
    orders: dict = {}
    max_iters = 0
    for g in range(num_ch):
        members = grouping.members_by_bs(g, num_bs)
        res = solve_one_channel(lists, g, members, pow2r, sigma2, order_rule=order_rule)
        max_iters = max(max_iters, res.iterations)
        if not res.feasible:
            return PowerSolution(
                p=np.full(cfg.num_users, np.nan),
                group_power=np.full((num_bs, num_ch), np.nan),
                ccinr=None,
                sic_order={},
                feasible=False,
                fixed_point_iterations=max_iters,
            )
        group_power[:, g] = res.powers
        for m in range(num_bs):
            orders[(m, g)] = res.orders[m]

    table = ccinr(gains, grouping, group_power, sigma2)
    p = np.zeros(cfg.num_users)
    s = table.s
    for (m, g), order in orders.items():
        acc = 0.0
        for n in reversed(order):
            p_n = (pow2r[n] - 1.0) * (1.0 / s[n] + acc)
            p[n] = p_n
            acc += p_n
    return PowerSolution(
        p=p,
        group_power=group_power,
        ccinr=table,
        sic_order=orders,
        feasible=True,
        fixed_point_iterations=max_iters,
    )


def achieved_rates(
    gains: ChannelGains,
    grouping: Grouping,
    solution: PowerSolution,
    noise_power_w: float,
    bandwidth_hz: float,
) -> np.ndarray:
    """Rates every user actually decodes at, in bit/s.

    Each user's rate is the minimum over itself and all later decoders of
    the rate at which that decoder can detect the user's signal; not-yet-
    decoded same-group signals plus inter-cell interference are noise.
    """
    if not solution.feasible:
        raise InfeasibleSolutionError("achieved_rates needs a feasible solution")
    lists = gains.as_lists()
    itf = solution.ccinr.interference
    p = solution.p
    n_users = grouping.num_users
    rates = np.zeros(n_users)
    for (m, g), order in solution.sic_order.items():
        k_count = len(order)
        row = lists[m][g]
        suffix = [0.0] * (k_count + 1)
        for k in range(k_count - 1, -1, -1):
            suffix[k] = suffix[k + 1] + p[order[k]]
        for k, n in enumerate(order):
            later = suffix[k + 1]
            best = math.inf
            for i in order[k:]:
                gi = row[i]
                val = math.log2(1.0 + gi * p[n] / (gi * later + itf[i] + noise_power_w))
                if val < best:
                    best = val
            rates[n] = best * bandwidth_hz
    return rates


def total_power(solution: PowerSolution) -> float:
    """Sum of all user powers in watts; raises when infeasible."""
    if not solution.feasible:
        raise InfeasibleSolutionError("no total power for an infeasible grouping")
    return float(np.sum(solution.p))


def total_power_or_inf(solution: PowerSolution) -> float:
    """Comparison form: +inf for infeasible solutions."""
    return float(np.sum(solution.p)) if solution.feasible else math.inf
