"""Compiled combinatorial kernels: min-cost transport and bipartite max-flow.

Both work on a dense bipartite graph with ``m`` supply rows and ``n`` demand
columns.  Row ``i`` may ship to column ``j`` along arc ``(i, j)``; residual
back arcs exist where the current flow is positive.
"""

import numpy as np
from numba import njit

INF = np.inf


@njit(cache=True)
def transport_ssp(cost, a, b, tol):
    """Successive shortest paths with Dijkstra on reduced costs.

    Returns ``(plan, u, v, status)`` where ``u_i + v_j <= cost_ij`` with
    equality on the support of the plan.  ``status`` is 0 on success and 1
    if the iteration cap was hit.
    """
    m, n = cost.shape
    plan = np.zeros((m, n))
    supply = a.copy()
    demand = b.copy()
    phi_r = np.zeros(m)
    phi_c = np.empty(n)
    for j in range(n):
        best = INF
        for i in range(m):
            if cost[i, j] < best:
                best = cost[i, j]
        phi_c[j] = best

    dist_r = np.empty(m)
    dist_c = np.empty(n)
    done_r = np.empty(m, dtype=np.bool_)
    done_c = np.empty(n, dtype=np.bool_)
    parent_c = np.empty(n, dtype=np.int64)  # row feeding column j
    parent_r = np.empty(m, dtype=np.int64)  # column feeding row i, -1 at a path start

    max_iter = 4 * (m + n) * (m + n) + 100
    status = 0
    for _ in range(max_iter):
        remaining = 0.0
        for i in range(m):
            if supply[i] > tol:
                remaining += supply[i]
        if remaining <= tol:
            break
        for i in range(m):
            dist_r[i] = 0.0 if supply[i] > tol else INF
            done_r[i] = False
            parent_r[i] = -1
        for j in range(n):
            dist_c[j] = INF
            done_c[j] = False
            parent_c[j] = -1

        target = -1
        dtarget = INF
        while True:
            best = INF
            node = -1
            is_row = True
            for i in range(m):
                if not done_r[i] and dist_r[i] < best:
                    best = dist_r[i]
                    node = i
                    is_row = True
            for j in range(n):
                if not done_c[j] and dist_c[j] < best:
                    best = dist_c[j]
                    node = j
                    is_row = False
            if node < 0:
                break
            if is_row:
                done_r[node] = True
                i = node
                for j in range(n):
                    if done_c[j]:
                        continue
                    rc = cost[i, j] + phi_r[i] - phi_c[j]
                    if rc < 0.0:
                        rc = 0.0
                    nd = best + rc
                    if nd < dist_c[j]:
                        dist_c[j] = nd
                        parent_c[j] = i
            else:
                done_c[node] = True
                j = node
                if demand[j] > tol:
                    target = j
                    dtarget = best
                    break
                for i in range(m):
                    if done_r[i] or plan[i, j] <= tol:
                        continue
                    rc = -cost[i, j] + phi_c[j] - phi_r[i]
                    if rc < 0.0:
                        rc = 0.0
                    nd = best + rc
                    if nd < dist_r[i]:
                        dist_r[i] = nd
                        parent_r[i] = j
        if target < 0:
            status = 1
            break

        for i in range(m):
            phi_r[i] += dist_r[i] if dist_r[i] < dtarget else dtarget
        for j in range(n):
            phi_c[j] += dist_c[j] if dist_c[j] < dtarget else dtarget

        # bottleneck along the path
        delta = demand[target]
        j = target
        while True:
            i = parent_c[j]
            jb = parent_r[i]
            if jb < 0:
                if supply[i] < delta:
                    delta = supply[i]
                break
            if plan[i, jb] < delta:
                delta = plan[i, jb]
            j = jb
        j = target
        demand[target] -= delta
        while True:
            i = parent_c[j]
            plan[i, j] += delta
            jb = parent_r[i]
            if jb < 0:
                supply[i] -= delta
                break
            plan[i, jb] -= delta
            if plan[i, jb] < 0.0:
                plan[i, jb] = 0.0
            j = jb
    else:
        status = 1

    u = -phi_r
    v = phi_c.copy()
    return plan, u, v, status


@njit(cache=True)
def bipartite_maxflow(allowed, a, b, tol):
    """Edmonds-Karp max-flow from row supplies ``a`` to column demands ``b``.

    Arcs run from row ``i`` to column ``j`` where ``allowed[i, j]`` holds,
    with unbounded capacity.  Returns ``(flow, value)``.
    """
    m, n = allowed.shape
    flow = np.zeros((m, n))
    out_r = np.zeros(m)
    in_c = np.zeros(n)
    parent_c = np.empty(n, dtype=np.int64)
    parent_r = np.empty(m, dtype=np.int64)
    seen_r = np.empty(m, dtype=np.bool_)
    seen_c = np.empty(n, dtype=np.bool_)
    queue = np.empty(m + n, dtype=np.int64)  # rows as i, columns as m + j

    max_iter = 4 * (m + 1) * (n + 1) * (m + n) + 100
    for _ in range(max_iter):
        head = 0
        tail = 0
        for i in range(m):
            seen_r[i] = False
            parent_r[i] = -1
            if a[i] - out_r[i] > tol:
                seen_r[i] = True
                queue[tail] = i
                tail += 1
        for j in range(n):
            seen_c[j] = False
            parent_c[j] = -1
        target = -1
        while head < tail and target < 0:
            node = queue[head]
            head += 1
            if node < m:
                i = node
                for j in range(n):
                    if allowed[i, j] and not seen_c[j]:
                        seen_c[j] = True
                        parent_c[j] = i
                        if b[j] - in_c[j] > tol:
                            target = j
                            break
                        queue[tail] = m + j
                        tail += 1
            else:
                j = node - m
                for i in range(m):
                    if not seen_r[i] and flow[i, j] > tol:
                        seen_r[i] = True
                        parent_r[i] = j
                        queue[tail] = i
                        tail += 1
        if target < 0:
            break

        delta = b[target] - in_c[target]
        j = target
        while True:
            i = parent_c[j]
            jb = parent_r[i]
            if jb < 0:
                r = a[i] - out_r[i]
                if r < delta:
                    delta = r
                break
            if flow[i, jb] < delta:
                delta = flow[i, jb]
            j = jb
        j = target
        in_c[target] += delta
        while True:
            i = parent_c[j]
            flow[i, j] += delta
            jb = parent_r[i]
            if jb < 0:
                out_r[i] += delta
                break
            flow[i, jb] -= delta
            if flow[i, jb] < 0.0:
                flow[i, jb] = 0.0
            j = jb

    total = 0.0
    for j in range(n):
        total += in_c[j]
    return flow, total
