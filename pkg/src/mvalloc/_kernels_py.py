"""Pure-Python search kernels.

Both kernels walk the assignment tree unit by unit, trying variants in
index order and nodes in platform order, on demands and capacities that
the caller has already scaled to integers.  That ordering is part of the
contract: together with strict-improvement updates it makes the reported
optimum the lexicographically first one, so results are reproducible and
must match mvalloc._kernels bit for bit.

`solve_search` is branch and bound: a branch is cut when its cost so far
plus the sum of the cheapest remaining variants cannot beat the
incumbent.  `brute_search` enumerates every capacity-feasible assignment
and shares nothing with the bound logic, which is what makes it useful as
an oracle for the solver.

Status codes: 0 optimal, 1 infeasible, 2 deadline hit.
"""

from __future__ import annotations

import time

OPTIMAL = 0
INFEASIBLE = 1
TIMED_OUT = 2

_CHECK_INTERVAL = 8192


class _Timeout(Exception):
    pass


def solve_search(
    nv,
    off,
    vmem,
    vcpu,
    vgpu,
    vcost,
    cap_mem,
    cap_cpu,
    cap_gpu,
    suffix_min,
    deadline_ns=None,
):
    n = len(nv)
    k = len(cap_mem)
    rem_mem = list(cap_mem)
    rem_cpu = list(cap_cpu)
    rem_gpu = list(cap_gpu)
    choice: list[tuple[int, int]] = [(-1, -1)] * n
    best_cost = None
    best_choice = None
    visited = 0
    check_left = _CHECK_INTERVAL
    monotonic_ns = time.monotonic_ns

    def dfs(u: int, cur: int) -> None:
        nonlocal best_cost, best_choice, visited, check_left
        visited += 1
        if deadline_ns is not None:
            check_left -= 1
            if check_left <= 0:
                check_left = _CHECK_INTERVAL
                if monotonic_ns() >= deadline_ns:
                    raise _Timeout
        if u == n:
            # The variant-level bound check is not re-run per node, so equal
            # cost leaves do reach this point; strictness keeps the first.
            if best_cost is None or cur < best_cost:
                best_cost = cur
                best_choice = choice.copy()
            return
        base = off[u]
        bound_rest = suffix_min[u + 1]
        for v in range(nv[u]):
            i = base + v
            c = cur + vcost[i]
            if best_cost is not None and c + bound_rest >= best_cost:
                continue
            m = vmem[i]
            p = vcpu[i]
            g = vgpu[i]
            for h in range(k):
                if m <= rem_mem[h] and p <= rem_cpu[h] and g <= rem_gpu[h]:
                    rem_mem[h] -= m
                    rem_cpu[h] -= p
                    rem_gpu[h] -= g
                    choice[u] = (v, h)
                    dfs(u + 1, c)
                    rem_mem[h] += m
                    rem_cpu[h] += p
                    rem_gpu[h] += g

    timed_out = False
    try:
        dfs(0, 0)
    except _Timeout:
        timed_out = True
    if timed_out:
        status = TIMED_OUT
    elif best_cost is None:
        status = INFEASIBLE
    else:
        status = OPTIMAL
    return status, best_cost, best_choice or [], visited


def brute_search(nv, off, vmem, vcpu, vgpu, vcost, cap_mem, cap_cpu, cap_gpu):
    n = len(nv)
    k = len(cap_mem)
    rem_mem = list(cap_mem)
    rem_cpu = list(cap_cpu)
    rem_gpu = list(cap_gpu)
    choice: list[tuple[int, int]] = [(-1, -1)] * n
    best_cost = None
    best_choice = None
    visited = 0

    def dfs(u: int, cur: int) -> None:
        nonlocal best_cost, best_choice, visited
        visited += 1
        if u == n:
            if best_cost is None or cur < best_cost:
                best_cost = cur
                best_choice = choice.copy()
            return
        base = off[u]
        for v in range(nv[u]):
            i = base + v
            m = vmem[i]
            p = vcpu[i]
            g = vgpu[i]
            c = vcost[i]
            for h in range(k):
                if m <= rem_mem[h] and p <= rem_cpu[h] and g <= rem_gpu[h]:
                    rem_mem[h] -= m
                    rem_cpu[h] -= p
                    rem_gpu[h] -= g
                    choice[u] = (v, h)
                    dfs(u + 1, cur + c)
                    rem_mem[h] += m
                    rem_cpu[h] += p
                    rem_gpu[h] += g

    dfs(0, 0)
    status = INFEASIBLE if best_cost is None else OPTIMAL
    return status, best_cost, best_choice or [], visited
