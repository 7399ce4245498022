"""Exact optimal allocation of multi-variant units onto hardware nodes.

`solve` is depth-first branch and bound over (variant, node) choices.
Feasibility at this layer sums memory, CPU load and GPU threads per node
across the units placed there; a unit's own members already share the
accelerator through its variant aggregation, while distinct units on one
node contend for it.  The objective is the weighted sum of chosen
variants' execution times, minimized exactly.

All arithmetic is exact.  Demands and capacities are rationals; per
resource, the solver multiplies through by the least common denominator
of every value involved, so the kernels compare plain integers and two
equal objectives are equal bit for bit, not within a tolerance.  The
incumbent is replaced only on strict improvement and the tree is walked
in a fixed order (units by descending normalized demand, then variant
index, then platform node order), which pins the reported optimum to the
lexicographically first one and makes solve deterministic.

`brute_force` enumerates every capacity-feasible assignment in model
order with no cost bound, guarded against oversized instances.  It is an
independent oracle for `solve`: the only code they share is the scaling.
"""

from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass, field
from fractions import Fraction

from . import engine
from .compaction import HighLayerModel
from .model import Platform

__all__ = [
    "OPTIMAL",
    "INFEASIBLE",
    "TIMED_OUT",
    "BRUTE_FORCE_GUARD",
    "Placement",
    "AllocationScheme",
    "SolverConfig",
    "SolverError",
    "EnumerationGuardError",
    "solve",
    "brute_force",
    "check_scheme",
]

log = logging.getLogger(__name__)

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
TIMED_OUT = "timeout"

_STATUS = {0: OPTIMAL, 1: INFEASIBLE, 2: TIMED_OUT}

# brute_force refuses instances with more raw assignments than this
BRUTE_FORCE_GUARD = 10_000_000


class SolverError(ValueError):
    pass


class EnumerationGuardError(SolverError):
    """The instance is too large for exhaustive enumeration."""


@dataclass(frozen=True)
class Placement:
    variant: int
    node: str


@dataclass
class AllocationScheme:
    status: str
    objective_ms: Fraction | None
    placements: dict[str, Placement]
    visited: int = field(default=0, compare=False)
    backend: str = field(default="", compare=False)


@dataclass
class SolverConfig:
    """Knobs for `solve`.

    unit_weights multiply each unit's exec_ms in the objective (default
    1).  time_limit_ms bounds the wall-clock search time; on expiry the
    scheme has status "timeout" and, only when incumbent_on_timeout is
    set, the best placements found so far without any optimality claim.
    unit_order "demand" sorts units hardest-first before the search,
    "declared" keeps model order; node_order has the single policy
    "declared".  Neither affects which objective value is optimal, only
    how fast it is reached.
    """

    unit_weights: dict[str, Fraction] = field(default_factory=dict)
    time_limit_ms: int | None = None
    unit_order: str = "demand"
    node_order: str = "declared"
    incumbent_on_timeout: bool = False


@dataclass
class _Flat:
    """One model, scaled to integers, in model (declared) unit order."""

    unit_ids: list[str]
    node_ids: list[str]
    nv: list[int]
    off: list[int]
    vmem: list[int]
    vcpu: list[int]
    vgpu: list[int]
    vcost: list[int]
    cap_mem: list[int]
    cap_cpu: list[int]
    cap_gpu: list[int]
    cost_den: int


def _check_config(cfg: SolverConfig) -> None:
    if cfg.unit_order not in ("demand", "declared"):
        raise SolverError(f"unknown unit_order {cfg.unit_order!r}")
    if cfg.node_order != "declared":
        raise SolverError(f"unknown node_order {cfg.node_order!r}")
    if cfg.time_limit_ms is not None and cfg.time_limit_ms < 0:
        raise SolverError("time_limit_ms must be non-negative")
    for unit_id, weight in cfg.unit_weights.items():
        if weight <= 0:
            raise SolverError(f"weight of unit {unit_id!r} must be positive")


def _flatten(model: HighLayerModel, platform: Platform, cfg: SolverConfig) -> _Flat:
    units = model.all_units()
    unit_ids = [u.id for u in units]
    if len(set(unit_ids)) != len(unit_ids):
        raise SolverError("duplicate unit ids in the model")
    unknown = set(cfg.unit_weights) - set(unit_ids)
    if unknown:
        raise SolverError(f"weights for unknown units: {', '.join(sorted(unknown))}")
    node_ids = [n.id for n in platform.nodes]
    if len(set(node_ids)) != len(node_ids):
        raise SolverError("duplicate node ids in the platform")

    mem_values: list[Fraction] = [n.use_mem for n in platform.nodes]
    cpu_values: list[Fraction] = [n.use_cpu for n in platform.nodes]
    cost_values: list[Fraction] = []
    for unit in units:
        if not unit.variants:
            raise SolverError(f"unit {unit.id!r} has no variants")
        weight = cfg.unit_weights.get(unit.id, Fraction(1))
        for variant in unit.variants:
            mem_values.append(variant.props.mem)
            cpu_values.append(variant.props.cpu)
            cost_values.append(weight * variant.props.exec_ms)

    mem_den = math.lcm(1, *(v.denominator for v in mem_values))
    cpu_den = math.lcm(1, *(v.denominator for v in cpu_values))
    cost_den = math.lcm(1, *(v.denominator for v in cost_values))

    nv: list[int] = []
    off: list[int] = []
    vmem: list[int] = []
    vcpu: list[int] = []
    vgpu: list[int] = []
    vcost: list[int] = []
    pos = 0
    for unit in units:
        weight = cfg.unit_weights.get(unit.id, Fraction(1))
        nv.append(len(unit.variants))
        off.append(pos)
        pos += len(unit.variants)
        for variant in unit.variants:
            p = variant.props
            vmem.append(int(p.mem * mem_den))
            vcpu.append(int(p.cpu * cpu_den))
            vgpu.append(p.gpu_threads)
            vcost.append(int(weight * p.exec_ms * cost_den))
    cap_mem = [int(n.use_mem * mem_den) for n in platform.nodes]
    cap_cpu = [int(n.use_cpu * cpu_den) for n in platform.nodes]
    cap_gpu = [n.use_gpu for n in platform.nodes]

    for name, values in (
        ("demand", vmem + vcpu + vgpu + vcost),
        ("capacity", cap_mem + cap_cpu + cap_gpu),
    ):
        if values and min(values) < 0:
            raise SolverError(f"negative {name} values; validate the model first")
    return _Flat(
        unit_ids=unit_ids,
        node_ids=node_ids,
        nv=nv,
        off=off,
        vmem=vmem,
        vcpu=vcpu,
        vgpu=vgpu,
        vcost=vcost,
        cap_mem=cap_mem,
        cap_cpu=cap_cpu,
        cap_gpu=cap_gpu,
        cost_den=cost_den,
    )


def _unit_minima(flat: _Flat, values: list[int]) -> list[int]:
    return [
        min(values[flat.off[u] + v] for v in range(flat.nv[u]))
        for u in range(len(flat.nv))
    ]


def _aggregate_infeasible(flat: _Flat) -> str | None:
    """Cheapest possible total demand vs total capacity, per resource.

    A failed check proves infeasibility outright; passing proves nothing.
    """
    for label, values, caps in (
        ("mem", flat.vmem, flat.cap_mem),
        ("cpu", flat.vcpu, flat.cap_cpu),
        ("gpu_threads", flat.vgpu, flat.cap_gpu),
    ):
        if flat.nv and sum(_unit_minima(flat, values)) > sum(caps):
            return label
    return None


def _search_order(flat: _Flat, unit_order: str) -> list[int]:
    n = len(flat.nv)
    if unit_order == "declared":
        return list(range(n))
    totals = [sum(flat.cap_mem), sum(flat.cap_cpu), sum(flat.cap_gpu)]
    minima = [
        _unit_minima(flat, flat.vmem),
        _unit_minima(flat, flat.vcpu),
        _unit_minima(flat, flat.vgpu),
    ]

    def score(u: int) -> Fraction:
        parts = [
            Fraction(minima[r][u], totals[r]) if totals[r] > 0 else Fraction(0)
            for r in range(3)
        ]
        return max(parts)

    return sorted(range(n), key=lambda u: (-score(u), u))


def _int64_safe(flat: _Flat) -> bool:
    bound = engine.INT64_SAFE_BOUND
    for values, caps in (
        (flat.vmem, flat.cap_mem),
        (flat.vcpu, flat.cap_cpu),
        (flat.vgpu, flat.cap_gpu),
        (flat.vcost, []),
    ):
        total = 0
        for u, count in enumerate(flat.nv):
            total += max(values[flat.off[u] + v] for v in range(count))
        if total >= bound or any(c >= bound for c in caps):
            return False
    return True


def _pick_backend(name: str, flat: _Flat) -> engine.Backend:
    be = engine.get_backend(name)
    if be.name == "c" and not _int64_safe(flat):
        if name == "c":
            raise SolverError(
                "scaled values do not fit the compiled kernels; use backend=python"
            )
        log.debug("values exceed int64 range, using python kernels")
        return engine.get_backend("python")
    return be


def solve(
    model: HighLayerModel,
    platform: Platform,
    config: SolverConfig | None = None,
    *,
    backend: str = "auto",
) -> AllocationScheme:
    """Find a minimum-cost feasible allocation, exactly.

    Returns a scheme with status "optimal" (placements cover every unit
    and objective_ms is the proven minimum), "infeasible" (no placements)
    or "timeout".
    """
    cfg = config or SolverConfig()
    _check_config(cfg)
    deadline_ns = None
    if cfg.time_limit_ms is not None:
        deadline_ns = time.monotonic_ns() + cfg.time_limit_ms * 1_000_000

    flat = _flatten(model, platform, cfg)
    be = _pick_backend(backend, flat)
    overloaded = _aggregate_infeasible(flat)
    if overloaded is not None:
        log.info("infeasible before search: total %s demand exceeds capacity", overloaded)
        return AllocationScheme(INFEASIBLE, None, {}, visited=0, backend=be.name)

    order = _search_order(flat, cfg.unit_order)
    nv = [flat.nv[u] for u in order]
    off: list[int] = []
    vmem: list[int] = []
    vcpu: list[int] = []
    vgpu: list[int] = []
    vcost: list[int] = []
    for u in order:
        off.append(len(vmem))
        base = flat.off[u]
        for v in range(flat.nv[u]):
            vmem.append(flat.vmem[base + v])
            vcpu.append(flat.vcpu[base + v])
            vgpu.append(flat.vgpu[base + v])
            vcost.append(flat.vcost[base + v])
    suffix_min = [0] * (len(order) + 1)
    for i in range(len(order) - 1, -1, -1):
        cheapest = min(vcost[off[i] + v] for v in range(nv[i]))
        suffix_min[i] = suffix_min[i + 1] + cheapest

    if deadline_ns is not None and time.monotonic_ns() >= deadline_ns:
        return AllocationScheme(TIMED_OUT, None, {}, visited=0, backend=be.name)
    code, cost, choices, visited = be.solve_search(
        nv,
        off,
        vmem,
        vcpu,
        vgpu,
        vcost,
        flat.cap_mem,
        flat.cap_cpu,
        flat.cap_gpu,
        suffix_min,
        deadline_ns,
    )
    status = _STATUS[code]
    log.debug("status %s after %d search nodes on backend %s", status, visited, be.name)

    expose = status == OPTIMAL or (
        status == TIMED_OUT and cfg.incumbent_on_timeout and choices
    )
    placements: dict[str, Placement] = {}
    objective = None
    if expose and choices:
        for i, unit_index in enumerate(order):
            v, h = choices[i]
            placements[flat.unit_ids[unit_index]] = Placement(v, flat.node_ids[h])
        objective = Fraction(cost, flat.cost_den)
    elif status == OPTIMAL:
        objective = Fraction(cost, flat.cost_den)  # zero units
    return AllocationScheme(status, objective, placements, visited=visited, backend=be.name)


def brute_force(
    model: HighLayerModel,
    platform: Platform,
    config: SolverConfig | None = None,
    *,
    backend: str = "auto",
) -> AllocationScheme:
    """Exhaustive reference solver; ignores time_limit_ms.

    Walks every capacity-feasible assignment in declared order and keeps
    the first one reaching the minimum.  Refuses instances whose raw
    assignment count exceeds BRUTE_FORCE_GUARD.
    """
    cfg = config or SolverConfig()
    _check_config(cfg)
    flat = _flatten(model, platform, cfg)
    assignments = 1
    k = len(flat.node_ids)
    for count in flat.nv:
        assignments *= count * k
        if assignments > BRUTE_FORCE_GUARD:
            raise EnumerationGuardError(
                f"instance has more than {BRUTE_FORCE_GUARD} raw assignments"
            )
    be = _pick_backend(backend, flat)
    code, cost, choices, visited = be.brute_search(
        flat.nv,
        flat.off,
        flat.vmem,
        flat.vcpu,
        flat.vgpu,
        flat.vcost,
        flat.cap_mem,
        flat.cap_cpu,
        flat.cap_gpu,
    )
    status = _STATUS[code]
    placements = {}
    objective = None
    if status == OPTIMAL:
        for u, (v, h) in enumerate(choices):
            placements[flat.unit_ids[u]] = Placement(v, flat.node_ids[h])
        objective = Fraction(cost, flat.cost_den)
    return AllocationScheme(status, objective, placements, visited=visited, backend=be.name)


def check_scheme(
    scheme: AllocationScheme, model: HighLayerModel, platform: Platform
) -> list[tuple[str, str]]:
    """Re-verify a scheme's placements against node capacities.

    Uses the compacted-layer reading: every resource, GPU threads
    included, sums across the distinct units sharing a node.  Returns
    (node id, resource) pairs for each overrun.
    """
    units = {u.id: u for u in model.all_units()}
    mem_sum: dict[str, Fraction] = {}
    cpu_sum: dict[str, Fraction] = {}
    gpu_sum: dict[str, int] = {}
    for unit_id, placement in scheme.placements.items():
        if unit_id not in units:
            raise SolverError(f"scheme places unknown unit {unit_id!r}")
        unit = units[unit_id]
        if not 0 <= placement.variant < len(unit.variants):
            raise SolverError(f"unit {unit_id!r} has no variant {placement.variant}")
        platform.node(placement.node)
        props = unit.variants[placement.variant].props
        mem_sum[placement.node] = mem_sum.get(placement.node, Fraction(0)) + props.mem
        cpu_sum[placement.node] = cpu_sum.get(placement.node, Fraction(0)) + props.cpu
        gpu_sum[placement.node] = gpu_sum.get(placement.node, 0) + props.gpu_threads
    violations: list[tuple[str, str]] = []
    for node in platform.nodes:
        if mem_sum.get(node.id, Fraction(0)) > node.use_mem:
            violations.append((node.id, "mem"))
        if cpu_sum.get(node.id, Fraction(0)) > node.use_cpu:
            violations.append((node.id, "cpu"))
        if gpu_sum.get(node.id, 0) > node.use_gpu:
            violations.append((node.id, "gpu_threads"))
    return violations
