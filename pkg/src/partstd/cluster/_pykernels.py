"""Pure numpy kernels; reference behaviour for the compiled ones in ``_ckernels.pyx``.

Both implementations accumulate squared differences column by column in
index order and apply the Lance-Williams updates with the same operand
order, so they agree bit for bit.
"""
import numpy as np

SINGLE, COMPLETE, AVERAGE, WARD = 0, 1, 2, 3


def pdist(X, w):
    """Condensed weighted Euclidean distances of the rows of ``X``."""
    X = np.ascontiguousarray(X, dtype=np.float64)
    n, d = X.shape
    I, J = np.triu_indices(n, 1)
    acc = np.zeros(len(I))
    for k in range(d):
        xk = X[:, k].copy()
        diff = xk[I] - xk[J]
        acc += w[k] * (diff * diff)
    return np.sqrt(acc)


def cross_dist(A, B, w):
    """Distances between every row of ``A`` and every row of ``B`` (a x b)."""
    A = np.asarray(A, dtype=np.float64)
    B = np.asarray(B, dtype=np.float64)
    acc = np.zeros((A.shape[0], B.shape[0]))
    for k in range(A.shape[1]):
        diff = A[:, k][:, None] - B[:, k][None, :]
        acc += w[k] * (diff * diff)
    return np.sqrt(acc)


def paired_dist(A, B, w):
    """Row-wise distances between ``A[i]`` and ``B[i]``."""
    A = np.asarray(A, dtype=np.float64)
    B = np.asarray(B, dtype=np.float64)
    acc = np.zeros(A.shape[0])
    for k in range(A.shape[1]):
        diff = A[:, k] - B[:, k]
        acc += w[k] * (diff * diff)
    return np.sqrt(acc)


def nn_chain(condensed, sizes, method):
    """Nearest-neighbour-chain agglomeration on a condensed dissimilarity array.

    Returns merges as (x, y, dissimilarity) in the order they were found,
    with x < y naming the leaf slots; the merged cluster lives on in slot y.
    Not sorted by height.
    """
    n = len(sizes)
    D = np.full((n, n), np.inf)
    I, J = np.triu_indices(n, 1)
    D[I, J] = condensed
    D[J, I] = condensed
    size = np.array(sizes, dtype=np.float64)
    active = np.ones(n, dtype=bool)

    out_x = np.empty(n - 1, dtype=np.int64)
    out_y = np.empty(n - 1, dtype=np.int64)
    out_d = np.empty(n - 1, dtype=np.float64)
    chain = []
    for step in range(n - 1):
        if not chain:
            chain.append(int(np.argmax(active)))
        while True:
            x = chain[-1]
            row = D[x]
            c = int(np.argmin(row))
            if len(chain) >= 2:
                prev = chain[-2]
                if not row[c] < row[prev]:
                    c = prev
            if len(chain) >= 2 and c == chain[-2]:
                break
            chain.append(c)
        x = chain.pop()
        y = chain.pop()
        if x > y:
            x, y = y, x
        dxy = D[x, y]
        out_x[step], out_y[step], out_d[step] = x, y, dxy

        nx, ny = size[x], size[y]
        active[x] = False
        active[y] = False
        k = np.flatnonzero(active)
        dxk = D[x, k]
        dyk = D[y, k]
        if method == SINGLE:
            new = np.minimum(dxk, dyk)
        elif method == COMPLETE:
            new = np.maximum(dxk, dyk)
        elif method == AVERAGE:
            new = (nx * dxk + ny * dyk) / (nx + ny)
        else:
            nk = size[k]
            new = ((nx + nk) * dxk + (ny + nk) * dyk - nk * dxy) / (nx + ny + nk)
        D[y, k] = new
        D[k, y] = new
        D[x, :] = np.inf
        D[:, x] = np.inf
        active[y] = True
        size[y] = nx + ny
    return out_x, out_y, out_d
