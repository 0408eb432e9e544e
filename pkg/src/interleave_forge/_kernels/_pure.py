"""Pure-Python GF(p) kernels.

Same contract as the compiled `_fastcore` module; selected at import time
when the extension is unavailable (see `interleave_forge._kernels`).
All matrices are flat row-major sequences of residues in [0, p).
"""

from array import array


def mat_mul_flat(a, ar, ac, b, bc, p):
    """Product of an (ar x ac) and an (ac x bc) matrix, flat row-major."""
    out = array("q", bytes(8 * ar * bc))
    for i in range(ar):
        abase = i * ac
        obase = i * bc
        for k in range(ac):
            aik = a[abase + k]
            if aik:
                bbase = k * bc
                for j in range(bc):
                    out[obase + j] = (out[obase + j] + aik * b[bbase + j]) % p
    return out


def rref_flat(a, r, c, p):
    """Reduced row echelon form with first-nonzero pivoting.

    Returns (rows, pivots): the nonzero rows as one flat array (normalized,
    fully reduced, ordered by pivot column) and the pivot column list.
    """
    rows = [array("q", a[i * c : (i + 1) * c]) for i in range(r)]
    pivots = []
    pr = 0
    for col in range(c):
        sel = -1
        for k in range(pr, r):
            if rows[k][col]:
                sel = k
                break
        if sel < 0:
            continue
        rows[pr], rows[sel] = rows[sel], rows[pr]
        piv = rows[pr]
        inv = pow(piv[col], p - 2, p)
        if inv != 1:
            for j in range(col, c):
                piv[j] = piv[j] * inv % p
        for k in range(r):
            if k != pr:
                f = rows[k][col]
                if f:
                    rk = rows[k]
                    for j in range(col, c):
                        rk[j] = (rk[j] - f * piv[j]) % p
        pivots.append(col)
        pr += 1
        if pr == r:
            break
    flat = array("q")
    for i in range(pr):
        flat.extend(rows[i])
    return flat, pivots


def ref_reduce(rows, pivots, width, v, p):
    """Reduce v against echelon rows (leading 1 at pivots[i], ascending).

    Returns the residual as a fresh array; zero residual means v lies in the
    row span.
    """
    out = array("q", v)
    for i, pv in enumerate(pivots):
        f = out[pv]
        if f:
            base = i * width
            for j in range(pv, width):
                out[j] = (out[j] - f * rows[base + j]) % p
    return out
