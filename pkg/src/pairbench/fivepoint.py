"""Minimal five-point essential-matrix solver (Nister's method).

Pipeline: the 5x9 epipolar constraint matrix yields a four-dimensional
nullspace basis (X, Y, Z, W); writing E = xX + yY + zZ + W, the cubic
constraints det(E) = 0 and 2 E E^T E - trace(E E^T) E = 0 expand into a
10x20 coefficient matrix over the degree-3 monomials; Gauss-Jordan
elimination with partial pivoting reduces it so that three eliminated rows
form a 3x3 polynomial system B(z), whose determinant is a degree-10
polynomial in z. Real roots come from companion-matrix eigenvalues; x and
y are back-substituted per root and each (x, y, z) is polished by a short
Gauss-Newton run on the original ten constraint polynomials.

The polynomial arithmetic is table-driven: products of the monomial bases
are precomputed once as scatter matrices so that all coefficient expansion
happens in a handful of batched matrix products.
"""
from __future__ import annotations

import numpy as np

from .errors import DegenerateSampleError
from .geometry import EssentialMatrix

# Monomial exponent tables, each entry (deg_x, deg_y, deg_z).
_EXP4 = [(1, 0, 0), (0, 1, 0), (0, 0, 1), (0, 0, 0)]
_EXP10 = [(2, 0, 0), (0, 2, 0), (0, 0, 2), (1, 1, 0), (1, 0, 1),
          (0, 1, 1), (1, 0, 0), (0, 1, 0), (0, 0, 1), (0, 0, 0)]
# Degree-3 monomials ordered so that after elimination the rows of interest
# lead with x^2 z, x^2, y^2 z, y^2, xyz, xy (Nister's ordering).
_EXP20 = [(3, 0, 0), (0, 3, 0), (2, 1, 0), (1, 2, 0), (2, 0, 1),
          (2, 0, 0), (0, 2, 1), (0, 2, 0), (1, 1, 1), (1, 1, 0),
          (1, 0, 2), (1, 0, 1), (1, 0, 0), (0, 1, 2), (0, 1, 1),
          (0, 1, 0), (0, 0, 3), (0, 0, 2), (0, 0, 1), (0, 0, 0)]


def _scatter(base_a, base_b, base_out):
    index = {exp: i for i, exp in enumerate(base_out)}
    table = np.zeros((len(base_out), len(base_a) * len(base_b)))
    for i, ea in enumerate(base_a):
        for j, eb in enumerate(base_b):
            summed = (ea[0] + eb[0], ea[1] + eb[1], ea[2] + eb[2])
            table[index[summed], i * len(base_b) + j] = 1.0
    return table


_MUL_1X1 = _scatter(_EXP4, _EXP4, _EXP10)      # (10, 16)
_MUL_2X1 = _scatter(_EXP10, _EXP4, _EXP20)     # (20, 40)

_EXP20_ARR = np.array(_EXP20)
_PX_IDX = _EXP20_ARR[:, 0]
_PY_IDX = _EXP20_ARR[:, 1]
_PZ_IDX = _EXP20_ARR[:, 2]
_PX_DER = np.maximum(_PX_IDX - 1, 0)
_PY_DER = np.maximum(_PY_IDX - 1, 0)
_PZ_DER = np.maximum(_PZ_IDX - 1, 0)

# Index plan for the batched polynomial products. Entry e_{ij} of the
# parameterized E is the linear polynomial Ee[3i + j].
_P11_A: list[int] = []
_P11_B: list[int] = []
for _i in range(3):
    for _k in range(3):
        for _j in range(3):
            _P11_A.append(3 * _i + _j)   # (E E^T)_{ik} = sum_j e_{ij} e_{kj}
            _P11_B.append(3 * _k + _j)
# Cofactor pairs of det(E) expanded along row 0.
for _a, _b in ((4, 8), (5, 7), (3, 8), (5, 6), (3, 7), (4, 6)):
    _P11_A.append(_a)
    _P11_B.append(_b)
_P11_A = np.array(_P11_A)
_P11_B = np.array(_P11_B)

_PIVOT_EPS = 1e-12
_RESIDUAL_MAX = 1e-8


def _poly_products_deg1(ee: np.ndarray) -> np.ndarray:
    factors_a = ee[_P11_A]
    factors_b = ee[_P11_B]
    outer = np.einsum("pa,pb->pab", factors_a, factors_b).reshape(len(factors_a), 16)
    return outer @ _MUL_1X1.T


def _poly_products_deg2x1(deg2: np.ndarray, deg1: np.ndarray) -> np.ndarray:
    outer = np.einsum("pa,pb->pab", deg2, deg1).reshape(len(deg2), 40)
    return outer @ _MUL_2X1.T


def _constraint_matrix(ee: np.ndarray) -> np.ndarray:
    """Expand the ten cubic constraints into their 10x20 coefficient matrix."""
    prod1 = _poly_products_deg1(ee)
    eet = prod1[:27].reshape(9, 3, 10).sum(axis=1)   # (E E^T)_{ik} at index 3i+k
    minors = (prod1[27] - prod1[28], prod1[29] - prod1[30], prod1[31] - prod1[32])
    trace = eet[0] + eet[4] + eet[8]

    deg2_factors = []
    deg1_factors = []
    for i in range(3):
        for j in range(3):
            for k in range(3):
                deg2_factors.append(eet[3 * i + k])
                deg1_factors.append(ee[3 * k + j])
    for i in range(9):
        deg2_factors.append(trace)
        deg1_factors.append(ee[i])
    deg2_factors.extend(minors)
    deg1_factors.extend([ee[0], ee[1], ee[2]])
    prod2 = _poly_products_deg2x1(np.asarray(deg2_factors), np.asarray(deg1_factors))

    matrix = np.empty((10, 20))
    matrix[0] = prod2[36] - prod2[37] + prod2[38]                  # det(E)
    eet_e = prod2[:27].reshape(9, 3, 20).sum(axis=1)
    matrix[1:] = 2.0 * eet_e - prod2[27:36]                        # trace constraint
    return matrix


def _gauss_jordan(matrix: np.ndarray) -> np.ndarray:
    for col in range(10):
        pivot_row = col + int(np.argmax(np.abs(matrix[col:, col])))
        if abs(matrix[pivot_row, col]) < _PIVOT_EPS:
            raise DegenerateSampleError(
                f"constraint matrix pivot {abs(matrix[pivot_row, col]):.2e} below "
                f"{_PIVOT_EPS:.0e} at column {col}"
            )
        if pivot_row != col:
            matrix[[col, pivot_row]] = matrix[[pivot_row, col]]
        matrix[col] /= matrix[col, col]
        for row in range(10):
            if row != col and matrix[row, col] != 0.0:
                matrix[row] -= matrix[row, col] * matrix[col]
    return matrix


def _subtract_z(e: np.ndarray, f: np.ndarray) -> np.ndarray:
    """Form e - z f over [xz^3 xz^2 xz x | yz^3 yz^2 yz y | z^4 z^3 z^2 z 1].

    The inputs are 10-vectors over the eliminated tail monomials
    [xz^2 xz x yz^2 yz y z^3 z^2 z 1].
    """
    return np.array([
        -f[0], e[0] - f[1], e[1] - f[2], e[2],
        -f[3], e[3] - f[4], e[4] - f[5], e[5],
        -f[6], e[6] - f[7], e[7] - f[8], e[8] - f[9], e[9],
    ])


def _refine_root(a0: np.ndarray, x: float, y: float, z: float) -> tuple[float, float, float]:
    """Gauss-Newton polish of (x, y, z) against the ten constraint residuals."""
    for _ in range(3):
        px = np.array([1.0, x, x * x, x ** 3])
        py = np.array([1.0, y, y * y, y ** 3])
        pz = np.array([1.0, z, z * z, z ** 3])
        monomials = px[_PX_IDX] * py[_PY_IDX] * pz[_PZ_IDX]
        jac_mon = np.empty((20, 3))
        jac_mon[:, 0] = _PX_IDX * px[_PX_DER] * py[_PY_IDX] * pz[_PZ_IDX]
        jac_mon[:, 1] = _PY_IDX * px[_PX_IDX] * py[_PY_DER] * pz[_PZ_IDX]
        jac_mon[:, 2] = _PZ_IDX * px[_PX_IDX] * py[_PY_IDX] * pz[_PZ_DER]
        residual = a0 @ monomials
        jacobian = a0 @ jac_mon
        lhs = jacobian.T @ jacobian
        try:
            step = np.linalg.solve(lhs, -(jacobian.T @ residual))
        except np.linalg.LinAlgError:
            break
        if not np.all(np.isfinite(step)):
            break
        x, y, z = x + step[0], y + step[1], z + step[2]
        if np.abs(step).max() < 1e-14:
            break
    return x, y, z


def estimate_essential_minimal(five_points: np.ndarray) -> list[EssentialMatrix]:
    """Solve the calibrated five-point problem.

    Args:
        five_points: 5 x 4 array of normalized correspondences
            (x_a, y_a, x_b, y_b).

    Returns:
        Up to ten candidate essential matrices, each normalized to unit
        Frobenius norm and satisfying all five epipolar constraints with
        residual below 1e-8.

    Raises:
        DegenerateSampleError: the constraint matrix is rank-deficient or
            the elimination loses its pivot (e.g. repeated points).
    """
    pts = np.asarray(five_points, dtype=np.float64)
    if pts.shape != (5, 4):
        raise DegenerateSampleError(f"expected a 5x4 sample, got shape {pts.shape}")
    ones = np.ones(5)
    q1 = np.column_stack([pts[:, 0], pts[:, 1], ones])
    q2 = np.column_stack([pts[:, 2], pts[:, 3], ones])
    # Row i is kron(q2_i, q1_i), matching a row-major flattening of E.
    constraints = np.einsum("ni,nj->nij", q2, q1).reshape(5, 9)
    _, singvals, vt = np.linalg.svd(constraints)
    if singvals[0] == 0.0 or singvals[4] <= _PIVOT_EPS * singvals[0]:
        raise DegenerateSampleError(
            "five-point constraint matrix is rank deficient (nullspace wider than 4)"
        )
    basis = vt[5:9].T          # (9, 4): columns are X, Y, Z, W flattened

    a0 = _constraint_matrix(basis)   # kept unreduced for residual polishing
    reduced = _gauss_jordan(a0.copy())
    tails = reduced[:, 10:]

    row_k = _subtract_z(tails[4], tails[5])
    row_l = _subtract_z(tails[6], tails[7])
    row_m = _subtract_z(tails[8], tails[9])
    b11, b12, b13 = row_k[0:4], row_k[4:8], row_k[8:13]
    b21, b22, b23 = row_l[0:4], row_l[4:8], row_l[8:13]
    b31, b32, b33 = row_m[0:4], row_m[4:8], row_m[8:13]

    p1 = np.convolve(b12, b23) - np.convolve(b13, b22)
    p2 = np.convolve(b13, b21) - np.convolve(b11, b23)
    p3 = np.convolve(b11, b22) - np.convolve(b12, b21)
    degree10 = np.convolve(p1, b31) + np.convolve(p2, b32) + np.convolve(p3, b33)
    if not np.any(np.abs(degree10) > 1e-14):
        raise DegenerateSampleError("determinant polynomial vanished identically")

    roots = np.roots(degree10)
    derivative = np.polyder(degree10)
    candidates: list[EssentialMatrix] = []
    for root in roots:
        if abs(root.imag) > 1e-8 * (1.0 + abs(root.real)):
            continue
        z = float(root.real)
        # Newton steps tighten the companion-matrix eigenvalue.
        for _ in range(3):
            slope = np.polyval(derivative, z)
            if slope == 0.0:
                break
            step = np.polyval(degree10, z) / slope
            if not np.isfinite(step):
                break
            z -= step
        b_at_z = np.array([
            [np.polyval(b11, z), np.polyval(b12, z), np.polyval(b13, z)],
            [np.polyval(b21, z), np.polyval(b22, z), np.polyval(b23, z)],
            [np.polyval(b31, z), np.polyval(b32, z), np.polyval(b33, z)],
        ])
        _, _, vtb = np.linalg.svd(b_at_z)
        null = vtb[-1]
        if abs(null[2]) < 1e-12:
            continue
        x, y = null[0] / null[2], null[1] / null[2]
        x, y, z = _refine_root(a0, x, y, z)
        flat = x * basis[:, 0] + y * basis[:, 1] + z * basis[:, 2] + basis[:, 3]
        norm = np.linalg.norm(flat)
        if norm == 0.0 or not np.isfinite(norm):
            continue
        e = (flat / norm).reshape(3, 3)
        residuals = np.abs(np.einsum("ni,ij,nj->n", q2, e, q1))
        if residuals.max() < _RESIDUAL_MAX:
            candidates.append(EssentialMatrix(e=e))
    return candidates
