# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled Dijkstra over a Steiner mesh whose cells are complete graphs."""
import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, INFINITY

cnp.import_array()


cdef inline void _sift_up(double[::1] key, long[::1] heap, long[::1] pos, long i) noexcept nogil:
    cdef long node = heap[i]
    cdef double k = key[node]
    cdef long parent
    while i > 0:
        parent = (i - 1) >> 1
        if key[heap[parent]] <= k:
            break
        heap[i] = heap[parent]
        pos[heap[i]] = i
        i = parent
    heap[i] = node
    pos[node] = i


cdef inline void _sift_down(double[::1] key, long[::1] heap, long[::1] pos, long size, long i) noexcept nogil:
    cdef long node = heap[i]
    cdef double k = key[node]
    cdef long child
    while True:
        child = 2 * i + 1
        if child >= size:
            break
        if child + 1 < size and key[heap[child + 1]] < key[heap[child]]:
            child += 1
        if key[heap[child]] >= k:
            break
        heap[i] = heap[child]
        pos[heap[i]] = i
        i = child
    heap[i] = node
    pos[node] = i


def dijkstra(const long[::1] cell_ptr, const long[::1] cell_nodes, const double[:, ::1] cell_xy,
             const long[::1] node_ptr, const long[::1] node_cell, const long[::1] node_local,
             const long[::1] seed_nodes, const double[::1] seed_dist,
             const long[::1] targets, double cutoff):
    """Single-source (multi-seed) shortest distances on the mesh.

    Returns (dist, pred_node, pred_cell); pred_node is -1 for seeds.
    """
    cdef long n = node_ptr.shape[0] - 1
    dist_arr = np.full(n, INFINITY)
    pred_arr = np.full(n, -1, dtype=np.int_)
    pcell_arr = np.full(n, -1, dtype=np.int_)
    cdef double[::1] dist = dist_arr
    cdef long[::1] pred = pred_arr
    cdef long[::1] pcell = pcell_arr
    heap_arr = np.empty(n, dtype=np.int_)
    pos_arr = np.full(n, -1, dtype=np.int_)
    done_arr = np.zeros(n, dtype=np.int8)
    want_arr = np.zeros(n, dtype=np.int8)
    cdef long[::1] heap = heap_arr
    cdef long[::1] pos = pos_arr
    cdef signed char[::1] done = done_arr
    cdef signed char[::1] want = want_arr
    cdef long size = 0
    cdef long remaining = 0
    cdef long i, k, u, v, c, a, b, base, lu, j
    cdef double du, nd, ux, uy, dx, dy

    for i in range(targets.shape[0]):
        if want[targets[i]] == 0:
            want[targets[i]] = 1
            remaining += 1

    for i in range(seed_nodes.shape[0]):
        u = seed_nodes[i]
        if seed_dist[i] < dist[u]:
            dist[u] = seed_dist[i]
            if pos[u] < 0:
                heap[size] = u
                pos[u] = size
                size += 1
            _sift_up(dist, heap, pos, pos[u])

    with nogil:
        while size > 0:
            u = heap[0]
            size -= 1
            if size > 0:
                heap[0] = heap[size]
                pos[heap[0]] = 0
                _sift_down(dist, heap, pos, size, 0)
            pos[u] = -1
            done[u] = 1
            du = dist[u]
            if du > cutoff:
                break
            if want[u]:
                remaining -= 1
                if remaining == 0:
                    break
            for k in range(node_ptr[u], node_ptr[u + 1]):
                c = node_cell[k]
                lu = node_local[k]
                a = cell_ptr[c]
                b = cell_ptr[c + 1]
                ux = cell_xy[a + lu, 0]
                uy = cell_xy[a + lu, 1]
                for j in range(a, b):
                    v = cell_nodes[j]
                    if done[v]:
                        continue
                    dx = cell_xy[j, 0] - ux
                    dy = cell_xy[j, 1] - uy
                    nd = du + sqrt(dx * dx + dy * dy)
                    if nd < dist[v]:
                        dist[v] = nd
                        pred[v] = u
                        pcell[v] = c
                        if pos[v] < 0:
                            heap[size] = v
                            pos[v] = size
                            size += 1
                        _sift_up(dist, heap, pos, pos[v])
    return dist_arr, pred_arr, pcell_arr
