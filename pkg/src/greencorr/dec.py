"""Decomposition of modules into indecomposables and endomorphism analysis.

The workhorse is Fitting's lemma applied to elements of the endomorphism
algebra: the minimal polynomial of an endomorphism either has two coprime
factors, which yields an exact idempotent by the Chinese remainder
theorem, or is primary and gives no split.  A module is certified
indecomposable when its endomorphism algebra provably has no nontrivial
idempotent: by exhaustive enumeration for small algebras (idempotents lift
along the radical, so absence of idempotents is equivalent to locality),
or trivially when the algebra is one dimensional.  Budget exhaustion
raises UndecidedError rather than guessing.

All randomness is drawn from an explicit integer seed.
"""

from __future__ import annotations

import math
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import sympy

from . import grp, rep
from .errors import (GreencorrError, InvariantViolation, PreconditionError,
                     UndecidedError)
from .gfla import (FpMatrix, Subspace, inv_mod, matmul_mod, _kernel_array,
                   _rref_array)

EXHAUSTIVE_STATE_CAP = 1 << 16   # enumerate End(M) fully up to this many elements
RANDOM_PROBE_BUDGET = 48


# -- polynomial helpers over GF(p) -------------------------------------------


def minimal_polynomial(mat: np.ndarray, p: int) -> List[int]:
    """Coefficients (low degree first, monic) of the minimal polynomial."""
    n = mat.shape[0]
    if n == 0:
        return [0, 1]
    rows = []
    power = np.eye(n, dtype=np.int64)
    for _ in range(n + 1):
        rows.append(power.reshape(-1))
        power = matmul_mod(power, mat, p)
        stacked = np.array(rows, dtype=np.int64)
        red, rank, _ = _rref_array(stacked, p)
        if rank < len(rows):
            ker = _kernel_array(stacked.T, p)
            # dependency with the highest power having nonzero coefficient
            for v in ker:
                if v[len(rows) - 1] % p:
                    lead = inv_mod(int(v[len(rows) - 1]), p)
                    return [int(c) * lead % p for c in v[: len(rows)]]
            raise InvariantViolation("rank drop without usable dependency")
    raise InvariantViolation("minimal polynomial not found below dim bound")


def factor_poly(coeffs: Sequence[int], p: int) -> List[Tuple[List[int], int]]:
    """Irreducible factorization over GF(p): [(coeffs_low_first, power)]."""
    x = sympy.symbols("x")
    poly = sympy.Poly([int(c) % p for c in reversed(coeffs)], x, modulus=p)
    _, factors = poly.factor_list()
    out = []
    for fac, k in factors:
        cs = [int(c) % p for c in reversed(fac.all_coeffs())]
        out.append((cs, int(k)))
    return out


def eval_poly(coeffs: Sequence[int], mat: np.ndarray, p: int) -> np.ndarray:
    """Horner evaluation of a polynomial at a matrix."""
    n = mat.shape[0]
    acc = np.zeros((n, n), dtype=np.int64)
    for c in reversed(list(coeffs)):
        acc = matmul_mod(acc, mat, p)
        if int(c) % p:
            acc = (acc + (int(c) % p) * np.eye(n, dtype=np.int64)) % p
    return acc


def poly_mul(a, b, p):
    out = [0] * (len(a) + len(b) - 1)
    for i, ca in enumerate(a):
        if ca % p == 0:
            continue
        for j, cb in enumerate(b):
            out[i + j] = (out[i + j] + ca * cb) % p
    return out


def poly_divmod(a, b, p):
    a = [c % p for c in a]
    b = [c % p for c in b]
    while b and b[-1] == 0:
        b.pop()
    if not b:
        raise ZeroDivisionError("polynomial division by zero")
    q = [0] * max(1, len(a) - len(b) + 1)
    r = list(a)
    binv = inv_mod(b[-1], p)
    for i in range(len(a) - len(b), -1, -1):
        if len(r) < i + len(b):
            continue
        c = (r[i + len(b) - 1] * binv) % p
        if c:
            q[i] = c
            for j, cb in enumerate(b):
                r[i + j] = (r[i + j] - c * cb) % p
    while r and r[-1] == 0:
        r.pop()
    return q, r


def poly_gcd_ext(a, b, p):
    """Extended gcd: (g, u, v) with u a + v b = g, g monic."""
    r0, r1 = list(a), list(b)
    s0, s1 = [1], [0]
    t0, t1 = [0], [1]
    while r1 and any(c % p for c in r1):
        q, r = poly_divmod(r0, r1, p)
        r0, r1 = r1, r
        s0, s1 = s1, [(x - y) % p for x, y in
                      _pad_sub(s0, poly_mul(q, s1, p), p)]
        t0, t1 = t1, [(x - y) % p for x, y in
                      _pad_sub(t0, poly_mul(q, t1, p), p)]
    while r0 and r0[-1] == 0:
        r0.pop()
    lead = inv_mod(r0[-1], p)
    norm = lambda cs: [c * lead % p for c in cs]
    return norm(r0), norm(s0), norm(t0)


def _pad_sub(a, b, p):
    n = max(len(a), len(b))
    a = list(a) + [0] * (n - len(a))
    b = list(b) + [0] * (n - len(b))
    return list(zip(a, b))


def nilpotent_part(mat: np.ndarray, p: int) -> np.ndarray:
    """Jordan-Chevalley nilpotent part inside k[mat], by Newton iteration.

    Requires the minimal polynomial to be primary (single irreducible
    base f); iterates s -> s - f(s) f'(s)^{-1} within k[mat].
    """
    coeffs = minimal_polynomial(mat, p)
    factors = factor_poly(coeffs, p)
    if len(factors) != 1:
        raise GreencorrError("nilpotent part needs a primary minimal polynomial")
    f, k = factors[0]
    if k == 1:
        return np.zeros_like(mat)
    fprime = [(c * i) % p for i, c in enumerate(f)][1:]
    s = mat.copy()
    for _ in range(mat.shape[0] + 1):
        fs = eval_poly(f, s, p)
        if not fs.any():
            break
        fps = eval_poly(fprime, s, p)
        # inverse of f'(s) within the commutative algebra k[mat]
        inv = _matrix_inverse_in_algebra(fps, mat, p)
        s = (s - matmul_mod(fs, inv, p)) % p
    else:
        raise InvariantViolation("Newton iteration for the semisimple part "
                                 "did not converge")
    return (mat - s) % p


def _matrix_inverse_in_algebra(x: np.ndarray, gen: np.ndarray, p: int) -> np.ndarray:
    """Inverse of x, known to be invertible, as a polynomial in gen is not
    required: a plain matrix inverse stays inside k[gen] because x does."""
    return FpMatrix(x, p, _trusted=True).inverse().a


# -- endomorphism algebras -----------------------------------------------------


class EndoAlgebra:
    """End_kG(M) with basis, structure constants and residue data."""

    def __init__(self, module: rep.Module):
        self.module = module
        self.hom = rep.hom_space(module, module)
        self.basis = self.hom.basis
        self.p = module.p
        self._structure = None
        self._residue = None

    @property
    def dim(self) -> int:
        return len(self.basis)

    def coordinates(self, mat) -> np.ndarray:
        if isinstance(mat, rep.ModHom):
            mat = mat.matrix
        if isinstance(mat, FpMatrix):
            flat = mat.flatten_row()
        else:
            flat = np.asarray(mat, dtype=np.int64).reshape(-1)
        coords = self.hom.as_subspace.coordinates_of(flat)
        if coords is None:
            raise InvariantViolation("matrix outside the endomorphism algebra")
        return coords

    def element(self, coords: Sequence[int]) -> np.ndarray:
        d = self.module.dim
        acc = np.zeros((d, d), dtype=np.int64)
        for c, b in zip(coords, self.basis):
            c = int(c) % self.p
            if c:
                acc = (acc + c * b.matrix.a) % self.p
        return acc

    def structure_constants(self) -> np.ndarray:
        """Tensor T with T[i, j] = coordinates of basis_i . basis_j."""
        if self._structure is None:
            d = self.dim
            T = np.zeros((d, d, d), dtype=np.int64)
            for i, bi in enumerate(self.basis):
                for j, bj in enumerate(self.basis):
                    prod = matmul_mod(bi.matrix.a, bj.matrix.a, self.p)
                    T[i, j] = self.coordinates(prod)
            self._structure = T
        return self._structure

    def identity_coords(self) -> np.ndarray:
        return self.coordinates(np.eye(self.module.dim, dtype=np.int64))

    # -- locality and residue field ------------------------------------

    def find_idempotent_split(self, seed: int = 0,
                              budget: int = RANDOM_PROBE_BUDGET):
        """Search for a nontrivial exact idempotent.

        Returns an idempotent matrix, or None when the search certifies
        locality, or raises UndecidedError when nothing is certified.
        """
        d = self.dim
        if d == 0:
            return None
        if d == 1:
            return None
        ident = np.eye(self.module.dim, dtype=np.int64)
        candidates = [b.matrix.a for b in self.basis]
        rng = np.random.default_rng(seed)
        for _ in range(budget):
            coeffs = rng.integers(0, self.p, size=d, dtype=np.int64)
            candidates.append(self.element(coeffs))
        for i in range(min(len(self.basis), 12)):
            for j in range(min(len(self.basis), 12)):
                candidates.append(matmul_mod(self.basis[i].matrix.a,
                                             self.basis[j].matrix.a, self.p))
        for x in candidates:
            e = _idempotent_from_element(x, self.p)
            if e is not None and e.any() and not np.array_equal(e, ident):
                return e
        # probes found nothing; certify by exhaustive enumeration if feasible
        if self.p ** d <= EXHAUSTIVE_STATE_CAP:
            e = self._exhaustive_idempotent()
            return e  # None means certified local
        raise UndecidedError(
            f"locality of End (dim {d}, p={self.p}) is beyond the exhaustive "
            f"cap and random probes found no split", payload=self.module)

    def _exhaustive_idempotent(self) -> Optional[np.ndarray]:
        """Enumerate all algebra elements; return a nontrivial idempotent
        or None if there is none (which certifies locality)."""
        d = self.dim
        T = self.structure_constants().reshape(d * d, d)
        one = self.identity_coords()
        total = self.p ** d
        chunk = 4096
        digits = np.array([self.p ** i for i in range(d)], dtype=np.int64)
        for start in range(0, total, chunk):
            idx = np.arange(start, min(start + chunk, total), dtype=np.int64)
            coeffs = (idx[:, None] // digits[None, :]) % self.p
            # e*e in coordinates: einsum over the structure tensor
            prod = np.einsum("ni,nj->nij", coeffs, coeffs).reshape(len(idx), d * d)
            sq = matmul_mod(prod, T, self.p)
            bad = sq != coeffs
            is_idem = ~bad.any(axis=1)
            for row in np.nonzero(is_idem)[0]:
                c = coeffs[row]
                if not c.any():
                    continue
                if np.array_equal(c, one):
                    continue
                return self.element(c)
        return None

    def residue_degree(self) -> int:
        """Residue field degree over GF(p), assuming the algebra is local."""
        deg = 1
        for b in self.basis:
            coeffs = minimal_polynomial(b.matrix.a, self.p)
            factors = factor_poly(coeffs, self.p)
            if len(factors) != 1:
                raise InvariantViolation("non-primary element in a local algebra")
            base_deg = len(factors[0][0]) - 1
            deg = math.lcm(deg, base_deg)
        return deg

    def radical_basis(self) -> Subspace:
        """Basis of the radical of a local algebra: the span of the
        nilpotent parts of the basis elements, dimension-checked."""
        d = self.dim
        amb = self.module.dim ** 2
        e = self.residue_degree()
        parts = []
        for b in self.basis:
            n = nilpotent_part(b.matrix.a, self.p)
            if n.any():
                parts.append(n.reshape(-1))
        J = Subspace.spanned_by(parts, self.p, amb)
        if J.dim == d - e:
            return J
        # extend with nilpotent parts of products until the dimension matches
        rng = np.random.default_rng(7)
        for _ in range(64):
            coeffs = rng.integers(0, self.p, size=d, dtype=np.int64)
            x = self.element(coeffs)
            coeffs2 = minimal_polynomial(x, self.p)
            factors = factor_poly(coeffs2, self.p)
            if len(factors) != 1:
                raise InvariantViolation("non-primary element in a local algebra")
            n = nilpotent_part(x, self.p)
            if n.any():
                J = J.sum(Subspace.spanned_by([n.reshape(-1)], self.p, amb))
            if J.dim == d - e:
                return J
        raise UndecidedError("radical basis search did not stabilize",
                             payload=self.module)

    def residue_projection(self):
        """(pi, e): pi maps an endomorphism matrix to its length-e
        coordinate vector modulo the radical; e is the residue degree."""
        if self._residue is not None:
            return self._residue
        e = self.residue_degree()
        J = self.radical_basis()
        # complement coordinates: coefficients on basis elements not in J
        amb = self.module.dim ** 2
        comp_rows = []
        span = J
        for b in self.basis:
            v = b.matrix.flatten_row()
            if not span.contains_vector(v):
                comp_rows.append(v)
                span = span.sum(Subspace.spanned_by([v], self.p, amb))
        if len(comp_rows) != e:
            raise InvariantViolation("complement dimension mismatch")
        jdim = J.dim
        if jdim:
            basis_rows = np.vstack([J.basis.a, np.array(comp_rows, dtype=np.int64)])
        else:
            basis_rows = np.array(comp_rows, dtype=np.int64)
        # precompute a left inverse of the stacked (J | complement) basis
        from .gfla import solve
        bt = FpMatrix(basis_rows.T.copy(), self.p, _trusted=True)

        def pi(mat) -> np.ndarray:
            if isinstance(mat, FpMatrix):
                flat = mat.flatten_row()
            else:
                flat = np.asarray(mat, dtype=np.int64).reshape(-1)
            sol = solve(bt, FpMatrix(flat.reshape(-1, 1), self.p, _trusted=True))
            if sol.solution is None:
                raise InvariantViolation("element outside its own algebra")
            coords = sol.solution.a.reshape(-1)
            return coords[jdim:jdim + e] % self.p

        self._residue = (pi, e)
        return self._residue

    def __repr__(self):
        return f"EndoAlgebra(dim={self.dim} on module of dim {self.module.dim})"


def endo_algebra(M: rep.Module) -> EndoAlgebra:
    return EndoAlgebra(M)


def _idempotent_from_element(x: np.ndarray, p: int) -> Optional[np.ndarray]:
    """Nontrivial idempotent from the CRT splitting of a minimal
    polynomial with at least two coprime primary parts, or None."""
    if x.shape[0] == 0:
        return None
    coeffs = minimal_polynomial(x, p)
    factors = factor_poly(coeffs, p)
    if len(factors) < 2:
        return None
    f1, k1 = factors[0]
    m1 = f1
    for _ in range(k1 - 1):
        m1 = poly_mul(m1, f1, p)
    m2 = [1]
    for f, k in factors[1:]:
        for _ in range(k):
            m2 = poly_mul(m2, f, p)
    g, u, v = poly_gcd_ext(m1, m2, p)
    if len(g) != 1:
        raise InvariantViolation("primary parts are not coprime")
    ginv = inv_mod(g[0], p)
    # e = v m2 / g : equal to 1 on the m1-primary part, 0 on the rest
    e = eval_poly(poly_mul([c * ginv % p for c in v], m2, p), x, p)
    check = matmul_mod(e, e, p)
    if not np.array_equal(check, e):
        raise InvariantViolation("CRT idempotent failed its own test")
    return e


# -- fitting splits and decomposition ------------------------------------------


class SplitWitness:
    def __init__(self, part1: rep.Module, part2: rep.Module,
                 inc1, proj1, inc2, proj2):
        self.part1, self.part2 = part1, part2
        self.inc1, self.proj1 = inc1, proj1
        self.inc2, self.proj2 = inc2, proj2


def _split_along_subspaces(M: rep.Module, rows_y: np.ndarray,
                           rows_z: np.ndarray) -> SplitWitness:
    """Split M along complementary invariant row-span bases."""
    p = M.p
    ry, rz = rows_y.shape[0], rows_z.shape[0]
    if ry + rz != M.dim:
        raise InvariantViolation("subspaces are not complementary")
    basis = np.vstack([rows_y, rows_z])
    # column convention: inclusion columns are the basis vectors, the
    # projection is the inverse change of basis, new action = P A I
    inc_all = basis.T % p
    P = FpMatrix(inc_all, p, _trusted=True).inverse().a
    inc1, inc2 = inc_all[:, :ry], inc_all[:, ry:]
    proj1, proj2 = P[:ry, :], P[ry:, :]
    mats1, mats2 = [], []
    for A in M.gen_mats:
        mats1.append(FpMatrix(matmul_mod(matmul_mod(proj1, A.a, p), inc1, p),
                              p, _trusted=True))
        mats2.append(FpMatrix(matmul_mod(matmul_mod(proj2, A.a, p), inc2, p),
                              p, _trusted=True))
        if matmul_mod(matmul_mod(proj2, A.a, p), inc1, p).any() or \
           matmul_mod(matmul_mod(proj1, A.a, p), inc2, p).any():
            raise InvariantViolation("split subspaces are not invariant")
    M1 = rep.Module(M.group, p, ry, mats1, check=False)
    M2 = rep.Module(M.group, p, rz, mats2, check=False)
    mk = lambda s, t, m: rep.ModHom(s, t, FpMatrix(m, p, _trusted=True), check=False)
    return SplitWitness(M1, M2,
                        mk(M1, M, inc1), mk(M, M1, proj1),
                        mk(M2, M, inc2), mk(M, M2, proj2))


def fitting_split(M: rep.Module, f) -> Optional[SplitWitness]:
    """Split M along the stable image and kernel of an endomorphism.

    Returns None when the split is trivial (f nilpotent or invertible).
    """
    if isinstance(f, rep.ModHom):
        if f.source is not M and f.source.dim != M.dim:
            raise PreconditionError("endomorphism of a different module")
        f = f.matrix.a
    if isinstance(f, FpMatrix):
        f = f.a
    f = np.mod(np.asarray(f, dtype=np.int64), M.p)
    if f.shape != (M.dim, M.dim):
        raise PreconditionError("not an endomorphism: wrong shape")
    if not rep.ModHom(M, M, FpMatrix(f, M.p, _trusted=True), check=False
                      ).is_intertwiner():
        raise InvariantViolation("not an endomorphism: fails to intertwine")
    n = 1
    power = FpMatrix(f, M.p, _trusted=True)
    while n < max(1, M.dim):
        power = power @ power
        n *= 2
    fn = power.a
    # stable image: row space of fn^T; stable kernel: kernel of fn
    red, rank, _ = _rref_array(fn.T, M.p)
    rows_y = red[:rank]
    rows_z = _kernel_array(fn, M.p)
    if rank == 0 or rank == M.dim:
        return None
    return _split_along_subspaces(M, rows_y, rows_z)


def split_by_idempotent(M: rep.Module, e: np.ndarray) -> SplitWitness:
    """Split along an exact idempotent: image and kernel."""
    p = M.p
    red, rank, _ = _rref_array(e.T, p)
    rows_y = red[:rank]
    rows_z = _kernel_array(e, p)
    return _split_along_subspaces(M, rows_y, rows_z)


class Decomposition:
    """Full decomposition of a module into indecomposable summands."""

    def __init__(self, module: rep.Module, instances: List[tuple],
                 classes: List[tuple]):
        self.module = module
        self.instances = instances      # list of (summand, inclusion, projection)
        self.summands = classes         # list of (representative, multiplicity)

    def reconstruction_identity(self) -> bool:
        d = self.module.dim
        acc = np.zeros((d, d), dtype=np.int64)
        for _, inc, proj in self.instances:
            acc = (acc + matmul_mod(inc.matrix.a, proj.matrix.a, self.module.p)) \
                % self.module.p
        return np.array_equal(acc, np.eye(d, dtype=np.int64))

    def class_multiset(self) -> List[Tuple[int, int]]:
        """(dim, multiplicity) pairs, canonically sorted."""
        return sorted((m.dim, mult) for m, mult in self.summands)

    def __repr__(self):
        parts = ", ".join(f"{m.dim}^{k}" if k > 1 else str(m.dim)
                          for m, k in self.summands)
        return f"Decomposition([{parts}] of dim {self.module.dim})"


def _probe_split(M: rep.Module, seed: int) -> Optional[SplitWitness]:
    """One round: look for any nontrivial split of M."""
    alg = EndoAlgebra(M)
    e = alg.find_idempotent_split(seed=seed)
    if e is None:
        return None
    return split_by_idempotent(M, e)


def decompose(M: rep.Module, seed: int = 0) -> Decomposition:
    """Indecomposable decomposition with witnesses; deterministic per seed."""
    if M.dim == 0:
        return Decomposition(M, [], [])
    ident = M.identity_hom()
    work = [(M, ident, ident)]
    finished = []
    counter = 0
    while work:
        U, inc, proj = work.pop()
        counter += 1
        witness = _probe_split(U, seed + counter)
        if witness is None:
            finished.append((U, inc, proj))
            continue
        work.append((witness.part1, inc @ witness.inc1, witness.proj1 @ proj))
        work.append((witness.part2, inc @ witness.inc2, witness.proj2 @ proj))
    finished.sort(key=lambda t: (t[0].dim, t[0].tobytes()))
    classes: List[List] = []
    for U, inc, proj in finished:
        placed = False
        for cls in classes:
            if cls[0][0].dim != U.dim:
                continue
            if is_isomorphic(cls[0][0], U, assume_indecomposable=True) is not None:
                cls.append((U, inc, proj))
                placed = True
                break
        if not placed:
            classes.append([(U, inc, proj)])
    classes.sort(key=lambda cls: (cls[0][0].dim, cls[0][0].tobytes()))
    summands = [(cls[0][0], len(cls)) for cls in classes]
    instances = [t for cls in classes for t in cls]
    out = Decomposition(M, instances, summands)
    if not out.reconstruction_identity():
        raise InvariantViolation("decomposition witnesses do not sum to Id")
    return out


def is_indecomposable(M: rep.Module, seed: int = 0) -> bool:
    if M.dim == 0:
        return False
    alg = EndoAlgebra(M)
    return alg.find_idempotent_split(seed=seed) is None


def _all_products_nilpotent(M: rep.Module, N: rep.Module,
                            fwd: rep.HomSpace, bwd: rep.HomSpace) -> bool:
    p = M.p
    bound = max(1, M.dim)
    for g in bwd.basis:
        for f in fwd.basis:
            prod = FpMatrix(matmul_mod(g.matrix.a, f.matrix.a, p), p,
                            _trusted=True)
            n = 1
            power = prod
            while n < bound:
                power = power @ power
                n *= 2
            if power.a.any():
                return False
    return True


def is_isomorphic(M: rep.Module, N: rep.Module, seed: int = 0,
                  assume_indecomposable: bool = False) -> Optional[rep.ModHom]:
    """Isomorphism witness or None.

    Invertible-combination search first; for indecomposables the absence
    side is settled by nilpotency of all composite pairs, otherwise by
    decomposing both sides and matching classes.
    """
    if not M.same_algebra(N):
        return None
    if M.dim != N.dim:
        return None
    if M.dim == 0:
        return rep.ModHom(M, N, FpMatrix.zeros(0, 0, M.p), check=False)
    fwd = rep.hom_space(M, N)
    if fwd.dim == 0:
        return None
    for b in fwd.basis:
        if b.is_invertible():
            return b
    p = M.p
    rng = np.random.default_rng(seed)
    for i in range(len(fwd.basis)):
        for j in range(i + 1, len(fwd.basis)):
            cand = fwd.basis[i] + fwd.basis[j]
            if cand.is_invertible():
                return cand
    for _ in range(RANDOM_PROBE_BUDGET):
        coeffs = rng.integers(0, p, size=fwd.dim, dtype=np.int64)
        cand = fwd.combination(coeffs)
        if cand.is_invertible():
            return cand
    bwd = rep.hom_space(N, M)
    if bwd.dim != fwd.dim:
        return None
    if assume_indecomposable:
        if _all_products_nilpotent(M, N, fwd, bwd):
            return None
        # some composite is a unit of the local algebra: build the witness
        for g in bwd.basis:
            for f in fwd.basis:
                prod = g @ f
                if prod.is_invertible():
                    return f
        raise InvariantViolation("non-nilpotent composite but no unit found")
    # general modules: match the two decompositions class by class
    dm = decompose(M, seed=seed)
    dn = decompose(N, seed=seed + 1)
    if sorted((u.dim, k) for u, k in dm.summands) != \
       sorted((u.dim, k) for u, k in dn.summands):
        return None
    n_insts = list(dn.instances)
    total = np.zeros((N.dim, M.dim), dtype=np.int64)
    for (U, incU, projU) in dm.instances:
        matched = None
        for idx, (V, incV, projV) in enumerate(n_insts):
            if U.dim != V.dim:
                continue
            w = is_isomorphic(U, V, seed=seed, assume_indecomposable=True)
            if w is not None:
                matched = (idx, w, incV)
                break
        if matched is None:
            return None
        idx, w, incV = matched
        n_insts.pop(idx)
        total = (total + matmul_mod(matmul_mod(incV.matrix.a, w.matrix.a, p),
                                    projU.matrix.a, p)) % p
    out = rep.ModHom(M, N, FpMatrix(total, p, _trusted=True), check=False)
    if not out.is_invertible():
        raise InvariantViolation("assembled isomorphism is singular")
    return out


def vertex(M: rep.Module, seed: int = 0) -> grp.SubgroupHandle:
    """Minimal p-subgroup class relative to which M is projective.

    M must be indecomposable; uniqueness of the minimal class is verified
    and its failure reported as an invariant violation.
    """
    if not is_indecomposable(M, seed=seed):
        raise PreconditionError("vertex of a decomposable module")
    G = M.group
    classes = grp.p_subgroups_up_to_conjugacy(G, M.p)
    passing = [Q for Q in classes if rep.higman_via_trace(M, Q)]
    if not passing:
        raise InvariantViolation("no projective class; Sylow must always pass")
    minimal = []
    for Q in passing:
        others = [R for R in passing if R is not Q and R.order < Q.order]
        if not any(grp.is_subconjugate(R, grp.SubgroupCollection([Q]), G)
                   for R in others):
            minimal.append(Q)
    if len(minimal) != 1:
        raise InvariantViolation(
            f"vertex is not unique up to conjugacy: {[m.order for m in minimal]}")
    return minimal[0]
