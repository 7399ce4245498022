"""Compacting alternative assemblies into multi-variant units.

An assembly of components collapses into a single variant whose demands
are the exact sums of its members, with one exception: GPU threads take
the maximum over the members, because components inside one unit run as a
pipeline on the same accelerator and never need their thread budgets at
the same time.  A unit carries one such variant per alternative; choosing
a variant and a node for every unit is what the solver does, and `unfold`
maps a solved scheme back onto individual components.

Enumeration of alternatives is pluggable.  "declared" takes the
hand-written list; "all_combinations" crosses all version choices of a
chain topology; "contiguous_gpu_segment" keeps only combinations whose
GPU-resident stretch is a single contiguous run of the chain, which is
the shape a camera pipeline actually wants (one upload, one download).
"""

from __future__ import annotations

import itertools
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from typing import TYPE_CHECKING, Mapping

from .model import (
    Assembly,
    Component,
    Kind,
    Repository,
    SystemArchitecture,
    UnitSpec,
)

if TYPE_CHECKING:
    from .solver import AllocationScheme

__all__ = [
    "VariantProperties",
    "Variant",
    "MultiVariantUnit",
    "HighLayerModel",
    "Declared",
    "AllCombinations",
    "ContiguousGpuSegment",
    "CompactionError",
    "UnfoldError",
    "aggregate_variant",
    "enumerate_alternatives",
    "compact",
    "singleton_unit",
    "build_high_layer",
    "unfold",
]


class CompactionError(ValueError):
    """A unit specification cannot be turned into variants."""


class UnfoldError(ValueError):
    """A scheme cannot be mapped back onto the detailed architecture."""


@dataclass(frozen=True)
class VariantProperties:
    """Aggregated demands of one alternative: mem, cpu and exec_ms are
    member sums, gpu_threads the member maximum."""

    mem: Fraction
    cpu: Fraction
    gpu_threads: int
    exec_ms: Fraction
    gpu_member_count: int


@dataclass
class Variant:
    index: int
    members: list[str]
    props: VariantProperties
    assembly: Assembly | None = field(default=None, compare=False)


@dataclass
class MultiVariantUnit:
    id: str
    variants: list[Variant]
    external_ports: list[str] = field(default_factory=list, compare=False)


@dataclass
class HighLayerModel:
    """The compacted layer handed to the solver."""

    units: list[MultiVariantUnit]
    singletons: list[MultiVariantUnit] = field(default_factory=list)
    connections: list[tuple[str, str]] = field(default_factory=list)

    def all_units(self) -> list[MultiVariantUnit]:
        return self.units + self.singletons


@dataclass
class Declared:
    alternatives: list[Assembly]


@dataclass
class AllCombinations:
    pass


@dataclass
class ContiguousGpuSegment:
    pass


def aggregate_variant(assembly: Assembly, repo: Repository) -> VariantProperties:
    """Fold an assembly's member demands into variant properties."""
    mem = Fraction(0)
    cpu = Fraction(0)
    exec_ms = Fraction(0)
    gpu_threads = 0
    gpu_members = 0
    for cid in assembly.components:
        comp = repo.component(cid)
        mem += comp.demand.mem
        cpu += comp.demand.cpu
        exec_ms += comp.demand.exec_ms
        gpu_threads = max(gpu_threads, comp.demand.gpu_threads)
        if comp.kind is Kind.GPU:
            gpu_members += 1
    return VariantProperties(
        mem=mem,
        cpu=cpu,
        gpu_threads=gpu_threads,
        exec_ms=exec_ms,
        gpu_member_count=gpu_members,
    )


def _chain_assembly(members: tuple[str, ...]) -> Assembly:
    connections = [(members[i], members[i + 1]) for i in range(len(members) - 1)]
    return Assembly(components=list(members), connections=connections)


def _function_counts(assembly: Assembly, repo: Repository) -> Counter:
    return Counter(repo.component(cid).function for cid in assembly.components)


def enumerate_alternatives(
    topology: list[str],
    repo: Repository,
    policy: Declared | AllCombinations | ContiguousGpuSegment,
) -> list[Assembly]:
    """Produce the alternative assemblies for a chain of functions.

    Generated policies emit assemblies in a fixed order: the cartesian
    product of version choices, each version list in repository order,
    varying the last function fastest.
    """
    if isinstance(policy, Declared):
        if not policy.alternatives:
            raise CompactionError("declared policy with no alternatives")
        want = Counter(topology) if topology else None
        for alt in policy.alternatives:
            counts = _function_counts(alt, repo)  # raises on unknown ids
            if want is not None and counts != want:
                raise CompactionError(
                    f"alternative {alt.components} does not realize the topology"
                )
        return list(policy.alternatives)

    version_lists: list[list[str]] = []
    for function in topology:
        versions = repo.versions_of(function)
        if not versions:
            raise CompactionError(f"no component realizes function {function!r}")
        version_lists.append(versions)
    combos = itertools.product(*version_lists)
    if isinstance(policy, AllCombinations):
        return [_chain_assembly(c) for c in combos]
    if isinstance(policy, ContiguousGpuSegment):
        kept = []
        for combo in combos:
            gpu_positions = [
                i
                for i, cid in enumerate(combo)
                if repo.component(cid).kind is Kind.GPU
            ]
            contiguous = (
                not gpu_positions
                or gpu_positions[-1] - gpu_positions[0] + 1 == len(gpu_positions)
            )
            if contiguous:
                kept.append(_chain_assembly(combo))
        return kept
    raise CompactionError(f"unknown enumeration policy {policy!r}")


def _ports(assembly: Assembly, repo: Repository) -> list[str]:
    ports: list[str] = []
    for cid in assembly.sources() + assembly.sinks():
        function = repo.component(cid).function
        if function not in ports:
            ports.append(function)
    return ports


def compact(
    unit_id: str, alternatives: list[Assembly], repo: Repository
) -> MultiVariantUnit:
    """Collapse alternatives into one multi-variant unit.

    All alternatives must realize the same multiset of functions; variant
    indices follow the order of the alternatives list.
    """
    if not alternatives:
        raise CompactionError(f"unit {unit_id!r} has no alternatives")
    reference = _function_counts(alternatives[0], repo)
    variants: list[Variant] = []
    for index, assembly in enumerate(alternatives):
        if _function_counts(assembly, repo) != reference:
            raise CompactionError(
                f"unit {unit_id!r}: alternative {index} realizes different functions"
            )
        variants.append(
            Variant(
                index=index,
                members=list(assembly.components),
                props=aggregate_variant(assembly, repo),
                assembly=assembly,
            )
        )
    return MultiVariantUnit(
        id=unit_id,
        variants=variants,
        external_ports=_ports(alternatives[0], repo),
    )


def singleton_unit(comp: Component) -> MultiVariantUnit:
    """Wrap a standalone component as a unit with a single variant."""
    props = VariantProperties(
        mem=comp.demand.mem,
        cpu=comp.demand.cpu,
        gpu_threads=comp.demand.gpu_threads,
        exec_ms=comp.demand.exec_ms,
        gpu_member_count=1 if comp.kind is Kind.GPU else 0,
    )
    return MultiVariantUnit(
        id=comp.id,
        variants=[Variant(index=0, members=[comp.id], props=props)],
        external_ports=[comp.function],
    )


def _policy_for(spec: UnitSpec) -> Declared | AllCombinations | ContiguousGpuSegment:
    if spec.policy == "declared":
        return Declared(alternatives=spec.alternatives or [])
    if spec.policy == "all_combinations":
        return AllCombinations()
    if spec.policy == "contiguous_gpu_segment":
        return ContiguousGpuSegment()
    raise CompactionError(f"unknown enumeration policy {spec.policy!r}")


def build_high_layer(arch: SystemArchitecture, repo: Repository) -> HighLayerModel:
    """Compact a whole architecture into the model the solver takes."""
    units = []
    for spec in arch.units:
        alternatives = enumerate_alternatives(
            spec.topology or [], repo, _policy_for(spec)
        )
        units.append(compact(spec.id, alternatives, repo))
    singletons = [singleton_unit(repo.component(cid)) for cid in arch.singletons]
    return HighLayerModel(
        units=units,
        singletons=singletons,
        connections=list(arch.connections),
    )


def unfold(scheme: "AllocationScheme", model: HighLayerModel) -> dict[str, str]:
    """Expand a solved scheme into a component-to-node assignment.

    Every unit's chosen variant contributes its members on the unit's
    node.  A component shared by several units must land on one node;
    conflicting placements are an error, as is a scheme that does not
    cover the model or was never solved to optimality.
    """
    if scheme.status != "optimal":
        raise UnfoldError(f"cannot unfold a scheme with status {scheme.status!r}")
    placements: Mapping[str, object] = scheme.placements
    units = {unit.id: unit for unit in model.all_units()}
    missing = sorted(set(units) - set(placements))
    if missing:
        raise UnfoldError(f"scheme places no unit for: {', '.join(missing)}")
    extra = sorted(set(placements) - set(units))
    if extra:
        raise UnfoldError(f"scheme places unknown units: {', '.join(extra)}")
    assignment: dict[str, str] = {}
    for unit in model.all_units():
        placement = placements[unit.id]
        if not 0 <= placement.variant < len(unit.variants):
            raise UnfoldError(
                f"unit {unit.id!r} has no variant {placement.variant}"
            )
        for member in unit.variants[placement.variant].members:
            previous = assignment.get(member)
            if previous is not None and previous != placement.node:
                raise UnfoldError(
                    f"component {member!r} pulled to both {previous!r} and "
                    f"{placement.node!r}"
                )
            assignment[member] = placement.node
    return assignment
