"""Component repository, assemblies, and hardware platform.

The detailed layer of the model: software components with exact resource
demands, assemblies wiring them into pipe-and-filter graphs, and the
heterogeneous platform they are allocated to.  Constructors are
deliberately permissive; `validate_repository` and friends report every
invariant violation as a diagnostic instead of aborting on the first one,
so a malformed file yields a complete report.

Feasibility at this layer is boundary-inclusive and treats GPU threads as
a peak figure: components time-share a GPU, so a node must cover the
largest single demand among its residents, not their sum.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping

__all__ = [
    "Kind",
    "ResourceDemand",
    "Component",
    "Repository",
    "Assembly",
    "HardwareNode",
    "Platform",
    "UnitSpec",
    "SystemArchitecture",
    "Diagnostic",
    "FeasibilityResult",
    "UnknownIdError",
    "validate_repository",
    "validate_platform",
    "validate_assembly",
    "validate_architecture",
    "check_feasibility",
]

POLICIES = ("declared", "all_combinations", "contiguous_gpu_segment")


class UnknownIdError(KeyError):
    """Raised when a component or node id is not part of the model."""


class Kind(str, enum.Enum):
    CPU = "CPU"
    GPU = "GPU"


@dataclass(frozen=True)
class ResourceDemand:
    """What one component consumes on the node it runs on.

    mem is in MB, cpu in load units relative to one reference core,
    gpu_threads a whole number of threads, exec_ms the execution time
    contributed to the system objective.
    """

    mem: Fraction
    cpu: Fraction
    gpu_threads: int
    exec_ms: Fraction


@dataclass
class Component:
    id: str
    kind: Kind
    function: str
    demand: ResourceDemand


@dataclass
class Repository:
    """All developed components plus the version groups that tie together
    alternative realizations of the same function."""

    components: list[Component]
    version_groups: dict[str, list[str]] = field(default_factory=dict)

    def component(self, component_id: str) -> Component:
        for comp in self.components:
            if comp.id == component_id:
                return comp
        raise UnknownIdError(component_id)

    def has(self, component_id: str) -> bool:
        return any(comp.id == component_id for comp in self.components)

    def versions_of(self, function: str) -> list[str]:
        """Component ids realizing `function`, explicit group first.

        A function never listed in version_groups falls back to the
        components declaring it, in repository order (a single ungrouped
        component is its own group of one).
        """
        if function in self.version_groups:
            return list(self.version_groups[function])
        return [c.id for c in self.components if c.function == function]


@dataclass
class Assembly:
    """A concrete pipe-and-filter graph over repository components."""

    components: list[str]
    connections: list[tuple[str, str]] = field(default_factory=list)

    def sources(self) -> list[str]:
        targets = {dst for _, dst in self.connections}
        return [c for c in self.components if c not in targets]

    def sinks(self) -> list[str]:
        origins = {src for src, _ in self.connections}
        return [c for c in self.components if c not in origins]


@dataclass
class HardwareNode:
    id: str
    use_mem: Fraction
    use_cpu: Fraction
    use_gpu: int = 0

    @property
    def has_gpu(self) -> bool:
        return self.use_gpu > 0


@dataclass
class Platform:
    nodes: list[HardwareNode]

    def node(self, node_id: str) -> HardwareNode:
        for node in self.nodes:
            if node.id == node_id:
                return node
        raise UnknownIdError(node_id)


@dataclass
class UnitSpec:
    """How one subsystem's variant set is obtained.

    policy "declared" takes `alternatives` verbatim; the generated
    policies ("all_combinations", "contiguous_gpu_segment") derive the
    alternatives from `topology`, an ordered list of function names
    forming a processing chain.
    """

    id: str
    policy: str
    topology: list[str] | None = None
    alternatives: list[Assembly] | None = None


@dataclass
class SystemArchitecture:
    """The detailed architecture: subsystems to compact, standalone
    components, and the data flow between them."""

    units: list[UnitSpec]
    singletons: list[str] = field(default_factory=list)
    connections: list[tuple[str, str]] = field(default_factory=list)


@dataclass(frozen=True)
class Diagnostic:
    """One violated invariant.  `subject` is the offending id, when any."""

    rule: str
    subject: str | None
    message: str

    def __str__(self) -> str:
        if self.subject is None:
            return f"{self.rule}: {self.message}"
        return f"{self.rule} [{self.subject}]: {self.message}"


def _check_demand(diags: list[Diagnostic], comp: Component) -> None:
    d = comp.demand
    if d.mem < 0:
        diags.append(Diagnostic("mem-negative", comp.id, f"mem is {d.mem}"))
    if d.cpu < 0:
        diags.append(Diagnostic("cpu-negative", comp.id, f"cpu is {d.cpu}"))
    if d.exec_ms < 0:
        diags.append(Diagnostic("exec-negative", comp.id, f"exec_ms is {d.exec_ms}"))
    if d.gpu_threads < 0:
        diags.append(
            Diagnostic("gpu-threads-negative", comp.id, f"gpu_threads is {d.gpu_threads}")
        )
    elif comp.kind is Kind.GPU and d.gpu_threads == 0:
        diags.append(
            Diagnostic("gpu-kind-threads", comp.id, "GPU component demands no threads")
        )
    elif comp.kind is Kind.CPU and d.gpu_threads > 0:
        diags.append(
            Diagnostic(
                "cpu-kind-threads",
                comp.id,
                f"CPU component demands {d.gpu_threads} GPU threads",
            )
        )


def validate_repository(repo: Repository) -> list[Diagnostic]:
    """Report every repository invariant violation; never raises."""
    diags: list[Diagnostic] = []
    seen: set[str] = set()
    for comp in repo.components:
        if comp.id in seen:
            diags.append(Diagnostic("duplicate-component-id", comp.id, "declared twice"))
        seen.add(comp.id)
        _check_demand(diags, comp)
    membership: dict[str, str] = {}
    for function, members in repo.version_groups.items():
        for member in members:
            if member not in seen:
                diags.append(
                    Diagnostic(
                        "group-unknown-component",
                        member,
                        f"group {function!r} lists a component that does not exist",
                    )
                )
                continue
            if member in membership:
                diags.append(
                    Diagnostic(
                        "group-duplicate-membership",
                        member,
                        f"already in group {membership[member]!r}",
                    )
                )
            membership[member] = function
            comp = repo.component(member)
            if comp.function != function:
                diags.append(
                    Diagnostic(
                        "group-function-mismatch",
                        member,
                        f"declares function {comp.function!r}, grouped under {function!r}",
                    )
                )
    return diags


def validate_platform(platform: Platform) -> list[Diagnostic]:
    diags: list[Diagnostic] = []
    if not platform.nodes:
        diags.append(Diagnostic("platform-empty", None, "no hardware nodes"))
    seen: set[str] = set()
    for node in platform.nodes:
        if node.id in seen:
            diags.append(Diagnostic("duplicate-node-id", node.id, "declared twice"))
        seen.add(node.id)
        if node.use_mem < 0:
            diags.append(Diagnostic("node-mem-negative", node.id, f"use_mem is {node.use_mem}"))
        if node.use_cpu < 0:
            diags.append(Diagnostic("node-cpu-negative", node.id, f"use_cpu is {node.use_cpu}"))
        if node.use_gpu < 0:
            diags.append(Diagnostic("node-gpu-negative", node.id, f"use_gpu is {node.use_gpu}"))
    return diags


def validate_assembly(
    assembly: Assembly, repo: Repository, label: str | None = None
) -> list[Diagnostic]:
    diags: list[Diagnostic] = []
    seen: set[str] = set()
    for cid in assembly.components:
        if not repo.has(cid):
            diags.append(
                Diagnostic("assembly-unknown-component", cid, "not in the repository")
            )
        if cid in seen:
            diags.append(Diagnostic("assembly-duplicate-component", cid, "listed twice"))
        seen.add(cid)
    for src, dst in assembly.connections:
        for endpoint in (src, dst):
            if endpoint not in seen:
                diags.append(
                    Diagnostic(
                        "connection-unknown-endpoint",
                        endpoint,
                        "connection endpoint is not an assembly member",
                    )
                )
    if _has_cycle(assembly.components, assembly.connections):
        diags.append(
            Diagnostic("assembly-cycle", label, "data-flow graph contains a cycle")
        )
    return diags


def _has_cycle(nodes: Iterable[str], edges: Iterable[tuple[str, str]]) -> bool:
    adjacency: dict[str, list[str]] = {n: [] for n in nodes}
    for src, dst in edges:
        if src in adjacency and dst in adjacency:
            adjacency[src].append(dst)
    WHITE, GREY, BLACK = 0, 1, 2
    color = {n: WHITE for n in adjacency}
    for start in adjacency:
        if color[start] != WHITE:
            continue
        stack: list[tuple[str, int]] = [(start, 0)]
        color[start] = GREY
        while stack:
            node, idx = stack[-1]
            if idx < len(adjacency[node]):
                stack[-1] = (node, idx + 1)
                nxt = adjacency[node][idx]
                if color[nxt] == GREY:
                    return True
                if color[nxt] == WHITE:
                    color[nxt] = GREY
                    stack.append((nxt, 0))
            else:
                color[node] = BLACK
                stack.pop()
    return False


@dataclass
class FeasibilityResult:
    feasible: bool
    violations: list[tuple[str, str]]


def check_feasibility(
    assignment: Mapping[str, str], repo: Repository, platform: Platform
) -> FeasibilityResult:
    """Check a component-to-node assignment against node capacities.

    Memory and CPU load add up per node; GPU threads are checked as the
    maximum over the components placed there.  All comparisons are
    boundary-inclusive.  The assignment may be partial.  Unknown component
    or node ids raise UnknownIdError.
    """
    mem_sum: dict[str, Fraction] = {}
    cpu_sum: dict[str, Fraction] = {}
    gpu_peak: dict[str, int] = {}
    for component_id, node_id in assignment.items():
        comp = repo.component(component_id)
        platform.node(node_id)
        mem_sum[node_id] = mem_sum.get(node_id, Fraction(0)) + comp.demand.mem
        cpu_sum[node_id] = cpu_sum.get(node_id, Fraction(0)) + comp.demand.cpu
        gpu_peak[node_id] = max(gpu_peak.get(node_id, 0), comp.demand.gpu_threads)
    violations: list[tuple[str, str]] = []
    for node in platform.nodes:
        if mem_sum.get(node.id, Fraction(0)) > node.use_mem:
            violations.append((node.id, "mem"))
        if cpu_sum.get(node.id, Fraction(0)) > node.use_cpu:
            violations.append((node.id, "cpu"))
        if gpu_peak.get(node.id, 0) > node.use_gpu:
            violations.append((node.id, "gpu_threads"))
    return FeasibilityResult(feasible=not violations, violations=violations)


def validate_architecture(arch: SystemArchitecture, repo: Repository) -> list[Diagnostic]:
    """Check the architecture section against the repository."""
    diags: list[Diagnostic] = []
    seen: set[str] = set()
    for spec in arch.units:
        if spec.id in seen:
            diags.append(Diagnostic("duplicate-unit-id", spec.id, "declared twice"))
        seen.add(spec.id)
        if spec.policy not in POLICIES:
            diags.append(
                Diagnostic(
                    "unknown-policy",
                    spec.id,
                    f"{spec.policy!r} is not one of {', '.join(POLICIES)}",
                )
            )
        if spec.policy == "declared":
            if not spec.alternatives:
                diags.append(
                    Diagnostic("missing-alternatives", spec.id, "declared policy needs them")
                )
            else:
                for alt in spec.alternatives:
                    diags.extend(validate_assembly(alt, repo, label=spec.id))
        elif spec.policy in POLICIES:
            if not spec.topology:
                diags.append(
                    Diagnostic("missing-topology", spec.id, "generated policy needs one")
                )
            else:
                for function in spec.topology:
                    if not repo.versions_of(function):
                        diags.append(
                            Diagnostic(
                                "function-no-versions",
                                spec.id,
                                f"no component realizes {function!r}",
                            )
                        )
    for cid in arch.singletons:
        if cid in seen:
            diags.append(Diagnostic("duplicate-unit-id", cid, "declared twice"))
        seen.add(cid)
        if not repo.has(cid):
            diags.append(
                Diagnostic("singleton-unknown-component", cid, "not in the repository")
            )
    for src, dst in arch.connections:
        for endpoint in (src, dst):
            if endpoint not in seen:
                diags.append(
                    Diagnostic(
                        "connection-unknown-endpoint",
                        endpoint,
                        "data flow references an undeclared unit",
                    )
                )
    return diags
