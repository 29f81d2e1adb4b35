"""Finite-dimensional kG-modules over GF(p) and the functor calculus.

A module is a list of invertible action matrices, one per group generator;
matrices for other elements are evaluated through the group's word table
and memoized.  On top of that sit restriction, induction, tensor, duals,
exact hom-space computation, relative traces, the Mackey decomposition
with an explicit isomorphism, Frobenius reciprocity, the four adjunction
maps, and the Higman projectivity tests.

Hom spaces are computed by a spinning algorithm: a module is generated by
few vectors, an intertwiner is determined by the images of those vectors,
and the remaining conditions form a small linear system.  This keeps
hom-space computation polynomial in the module dimension rather than in
its square.
"""

from __future__ import annotations

import json
import os
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from . import grp
from .errors import (CompatibilityError, ContainmentError, DimensionError,
                     GreencorrError, InvariantViolation, ParseError,
                     PreconditionError)
from .gfla import (FpMatrix, KernelAccumulator, Subspace, batched_matmul_mod,
                   check_prime, matmul_mod, _kernel_array, _rref_array)

_ACTION_CACHE_DIM_CAP = 256  # cache element matrices only up to this dim
_FULL_CHECK_BUDGET = 40_000_000  # |G| * gens * dim^3 budget for full verification


class Module:
    """kG-module given by generator action matrices."""

    def __init__(self, group: grp.Group, p: int, dim: int,
                 gen_mats: Sequence[FpMatrix], check: bool = True):
        self.group = group
        self.p = check_prime(p)
        self.dim = int(dim)
        if self.dim < 0:
            raise DimensionError("negative dimension")
        mats = []
        for m in gen_mats:
            if not isinstance(m, FpMatrix):
                m = FpMatrix(m, p)
            if m.shape != (self.dim, self.dim):
                raise DimensionError(f"action matrix shape {m.shape} != dim {self.dim}")
            if m.p != self.p:
                raise CompatibilityError("action matrix modulus mismatch")
            mats.append(m)
        if len(mats) != len(group.generators):
            raise CompatibilityError(
                f"need {len(group.generators)} action matrices, got {len(mats)}")
        self.gen_mats: Tuple[FpMatrix, ...] = tuple(mats)
        self._act_cache: Dict[int, np.ndarray] = {0: np.eye(self.dim, dtype=np.int64)}
        if check:
            self.validate()

    # -- validation -------------------------------------------------------

    def validate(self, full: Optional[bool] = None):
        """Check invertibility and that the generator map extends to a
        homomorphism on the whole element table.

        The homomorphism check costs |G| * gens * dim^3; it is skipped for
        large modules unless full=True is forced.
        """
        for m in self.gen_mats:
            if self.dim and not m.is_invertible():
                raise InvariantViolation("generator action is singular")
        if self.dim == 0:
            return
        cost = self.group.order * max(1, len(self.gen_mats)) * self.dim ** 3
        if full is None:
            full = cost <= _FULL_CHECK_BUDGET
        if not full:
            # cheap partial check: each generator's order relation
            for g, m in zip(self.group.generators, self.gen_mats):
                if m.pow(g.order()) != FpMatrix.identity(self.dim, self.p):
                    raise InvariantViolation("generator order relation fails")
            return
        for ei in range(self.group.order):
            me = self.action_of(ei)
            for gpos in range(len(self.gen_mats)):
                prod_idx = self.group.mul(ei, self.group.generator_indices()[gpos])
                expect = matmul_mod(me, self.gen_mats[gpos].a, self.p)
                if not np.array_equal(self.action_of(prod_idx), expect):
                    raise InvariantViolation("action is not a homomorphism")

    # -- element action ----------------------------------------------------

    def action_of(self, element_index: int) -> np.ndarray:
        """Action matrix (read-only ndarray) of the element with the given
        canonical index."""
        cached = self._act_cache.get(element_index)
        if cached is not None:
            return cached
        entry = self.group.word_table_entry(element_index)
        if entry is None:
            raise InvariantViolation("non-identity element missing from word table")
        parent, gpos = entry
        mat = matmul_mod(self.action_of(parent), self.gen_mats[gpos].a, self.p)
        if self.dim <= _ACTION_CACHE_DIM_CAP:
            self._act_cache[element_index] = mat
        return mat

    def action_of_perm(self, g: grp.Perm) -> np.ndarray:
        return self.action_of(self.group.index_of(g))

    def action_matrix(self, g) -> FpMatrix:
        idx = g if isinstance(g, int) else self.group.index_of(g)
        return FpMatrix(self.action_of(idx).copy(), self.p, _trusted=True)

    def action_stack(self, element_indices: Sequence[int]) -> np.ndarray:
        return np.stack([self.action_of(i) for i in element_indices]) \
            if element_indices else np.zeros((0, self.dim, self.dim), dtype=np.int64)

    # -- misc ---------------------------------------------------------------

    def is_zero(self) -> bool:
        return self.dim == 0

    def identity_hom(self) -> "ModHom":
        return ModHom(self, self, FpMatrix.identity(self.dim, self.p), check=False)

    def zero_hom_to(self, target: "Module") -> "ModHom":
        return ModHom(self, target, FpMatrix.zeros(target.dim, self.dim, self.p),
                      check=False)

    def tobytes(self) -> bytes:
        parts = [np.array([self.p, self.dim], dtype=np.int64).tobytes()]
        parts += [m.tobytes() for m in self.gen_mats]
        return b"".join(parts)

    def __repr__(self):
        return f"Module(dim={self.dim}, p={self.p}, |G|={self.group.order})"

    def same_algebra(self, other: "Module") -> bool:
        return self.p == other.p and self.group == other.group

    def _require_same_algebra(self, other: "Module"):
        if not self.same_algebra(other):
            raise CompatibilityError("modules live over different group algebras")


class ModHom:
    """kG-linear map between modules over the same group algebra."""

    __slots__ = ("source", "target", "matrix")

    def __init__(self, source: Module, target: Module, matrix: FpMatrix,
                 check: bool = True):
        source._require_same_algebra(target)
        if matrix.shape != (target.dim, source.dim):
            raise DimensionError(
                f"hom matrix shape {matrix.shape} != ({target.dim},{source.dim})")
        self.source = source
        self.target = target
        self.matrix = matrix
        if check and not self.is_intertwiner():
            raise InvariantViolation("matrix does not intertwine the actions")

    def is_intertwiner(self) -> bool:
        a = self.matrix.a
        for ms, mt in zip(self.source.gen_mats, self.target.gen_mats):
            if not np.array_equal(matmul_mod(a, ms.a, self.source.p),
                                  matmul_mod(mt.a, a, self.source.p)):
                return False
        return True

    def __matmul__(self, other: "ModHom") -> "ModHom":
        if other.target.dim != self.source.dim:
            raise DimensionError("composition shape mismatch")
        return ModHom(other.source, self.target, self.matrix @ other.matrix,
                      check=False)

    def __add__(self, other: "ModHom") -> "ModHom":
        return ModHom(self.source, self.target, self.matrix + other.matrix, check=False)

    def __sub__(self, other: "ModHom") -> "ModHom":
        return ModHom(self.source, self.target, self.matrix - other.matrix, check=False)

    def __neg__(self) -> "ModHom":
        return ModHom(self.source, self.target, -self.matrix, check=False)

    def __mul__(self, scalar: int) -> "ModHom":
        return ModHom(self.source, self.target, self.matrix * scalar, check=False)

    __rmul__ = __mul__

    def __eq__(self, other):
        return (isinstance(other, ModHom) and self.matrix == other.matrix
                and self.source.dim == other.source.dim
                and self.target.dim == other.target.dim)

    def __hash__(self):
        return hash(self.matrix)

    def is_zero(self) -> bool:
        return self.matrix.is_zero()

    def is_invertible(self) -> bool:
        return self.matrix.is_invertible()

    def inverse(self) -> "ModHom":
        return ModHom(self.target, self.source, self.matrix.inverse(), check=False)

    def __repr__(self):
        return f"ModHom({self.source.dim}->{self.target.dim}, p={self.source.p})"


class HomSpace:
    """Exact basis of Hom_kG(source, target), canonically ordered."""

    def __init__(self, source: Module, target: Module,
                 basis_matrices: Sequence[np.ndarray]):
        self.source = source
        self.target = target
        p = source.p
        ambient = target.dim * source.dim
        if basis_matrices:
            flat = np.stack([np.asarray(b, dtype=np.int64).reshape(-1)
                             for b in basis_matrices])
            red, rank, _ = _rref_array(flat, p)
            rows = red[:rank]
        else:
            rows = np.zeros((0, ambient), dtype=np.int64)
        self.as_subspace = Subspace(FpMatrix(rows.copy(), p, _trusted=True),
                                    ambient, _canonical=True)
        self.basis: Tuple[ModHom, ...] = tuple(
            ModHom(source, target,
                   FpMatrix(rows[i].reshape(target.dim, source.dim).copy(), p,
                            _trusted=True), check=False)
            for i in range(rows.shape[0]))

    @property
    def dim(self) -> int:
        return len(self.basis)

    def combination(self, coeffs: Sequence[int]) -> ModHom:
        p = self.source.p
        acc = np.zeros((self.target.dim, self.source.dim), dtype=np.int64)
        for c, b in zip(coeffs, self.basis):
            acc = (acc + (int(c) % p) * b.matrix.a) % p
        return ModHom(self.source, self.target, FpMatrix(acc, p, _trusted=True),
                      check=False)

    def __repr__(self):
        return f"HomSpace(dim={self.dim}: {self.source.dim}->{self.target.dim})"


# -- standard constructions ---------------------------------------------------


def zero_module(G: grp.Group, p: int) -> Module:
    return Module(G, p, 0, [FpMatrix.zeros(0, 0, p) for _ in G.generators],
                  check=False)


def trivial(G: grp.Group, p: int) -> Module:
    return Module(G, p, 1, [FpMatrix.identity(1, p) for _ in G.generators],
                  check=False)


def regular(G: grp.Group, p: int) -> Module:
    """Left multiplication on the element basis, in canonical order."""
    mats = []
    n = G.order
    for g in G.generators:
        gi = G.index_of(g)
        m = np.zeros((n, n), dtype=np.int64)
        for j in range(n):
            m[G.mul(gi, j), j] = 1
        mats.append(FpMatrix(m, p, _trusted=True))
    return Module(G, p, n, mats, check=False)


def _coset_data(G: grp.Group, H: grp.SubgroupHandle):
    """(reps, rep_indices, table) with table[g] = (coset position, h index)
    so that g = reps[pos] * h."""
    reps = grp.left_coset_reps(G, H)
    rep_indices = [G.index_of(r) for r in reps]
    table = [None] * G.order
    for pos, ri in enumerate(rep_indices):
        for h in H.element_indices:
            table[G.mul(ri, h)] = (pos, h)
    return reps, rep_indices, table


_COSET_CACHE: Dict[Tuple[int, tuple], tuple] = {}


def coset_data(G: grp.Group, H: grp.SubgroupHandle):
    key = (id(G), H.element_indices)
    got = _COSET_CACHE.get(key)
    if got is None:
        got = _coset_data(G, H)
        _COSET_CACHE[key] = got
    return got


def permutation_module(G: grp.Group, H: grp.SubgroupHandle, p: int) -> Module:
    """Action on the left cosets G/H; equals induction of the trivial
    module, with the same canonical basis order."""
    reps, rep_indices, table = coset_data(G, H)
    n = len(reps)
    mats = []
    for g in G.generators:
        gi = G.index_of(g)
        m = np.zeros((n, n), dtype=np.int64)
        for pos, ri in enumerate(rep_indices):
            new_pos, _ = table[G.mul(gi, ri)]
            m[new_pos, pos] = 1
        mats.append(FpMatrix(m, p, _trusted=True))
    return Module(G, p, n, mats, check=False)


def direct_sum(*mods: Module) -> Module:
    if not mods:
        raise GreencorrError("direct_sum of nothing")
    first = mods[0]
    for m in mods[1:]:
        first._require_same_algebra(m)
    dim = sum(m.dim for m in mods)
    mats = []
    for gpos in range(len(first.group.generators)):
        blocks = [m.gen_mats[gpos].a for m in mods]
        big = np.zeros((dim, dim), dtype=np.int64)
        off = 0
        for b in blocks:
            k = b.shape[0]
            big[off:off + k, off:off + k] = b
            off += k
        mats.append(FpMatrix(big, first.p, _trusted=True))
    return Module(first.group, first.p, dim, mats, check=False)


def direct_sum_with_witnesses(mods: Sequence[Module]):
    """(sum, inclusions, projections) with the canonical block layout."""
    total = direct_sum(*mods)
    p = total.p
    incs, projs = [], []
    off = 0
    for m in mods:
        inc = np.zeros((total.dim, m.dim), dtype=np.int64)
        inc[off:off + m.dim, :] = np.eye(m.dim, dtype=np.int64)
        incs.append(ModHom(m, total, FpMatrix(inc, p, _trusted=True), check=False))
        projs.append(ModHom(total, m, FpMatrix(inc.T.copy(), p, _trusted=True),
                            check=False))
        off += m.dim
    return total, incs, projs


def tensor(M: Module, N: Module) -> Module:
    """Inner tensor product with the diagonal action; Kronecker basis
    order (M index major)."""
    M._require_same_algebra(N)
    mats = [a.kron(b) for a, b in zip(M.gen_mats, N.gen_mats)]
    return Module(M.group, M.p, M.dim * N.dim, mats, check=False)


def dual(M: Module) -> Module:
    """Contragredient: g acts by transpose of the inverse action."""
    mats = []
    for g in M.group.generators:
        gi = M.group.index_of(g)
        inv = M.action_of(M.group.inv(gi))
        mats.append(FpMatrix(inv.T.copy(), M.p, _trusted=True))
    return Module(M.group, M.p, M.dim, mats, check=False)


def restrict(M: Module, H: grp.SubgroupHandle) -> Module:
    """Restriction along H <= G; the underlying space is unchanged."""
    if H.parent != M.group:
        raise ContainmentError("subgroup handle is not inside the module's group")
    Hgrp = _handle_group(H)
    mats = [FpMatrix(M.action_of_perm(g).copy(), M.p, _trusted=True)
            for g in Hgrp.generators]
    return Module(Hgrp, M.p, M.dim, mats, check=False)


_HANDLE_GROUP_CACHE: Dict[Tuple[int, tuple], grp.Group] = {}


def _handle_group(H: grp.SubgroupHandle) -> grp.Group:
    key = (id(H.parent), H.element_indices)
    got = _HANDLE_GROUP_CACHE.get(key)
    if got is None:
        got = H.as_group()
        _HANDLE_GROUP_CACHE[key] = got
    return got


def induce(L: Module, G: grp.Group, H: grp.SubgroupHandle) -> Module:
    """Induction along H <= G on the basis (coset rep, inner basis vector),
    rep index major, with the canonical coset representatives."""
    if H.parent != G:
        raise ContainmentError("subgroup handle is not inside G")
    Hgrp = _handle_group(H)
    if L.group != Hgrp:
        raise CompatibilityError("module is not over the subgroup's group")
    reps, rep_indices, table = coset_data(G, H)
    nc, d = len(reps), L.dim
    dim = nc * d
    mats = []
    for g in G.generators:
        gi = G.index_of(g)
        m = np.zeros((dim, dim), dtype=np.int64)
        for pos, ri in enumerate(rep_indices):
            new_pos, h_idx = table[G.mul(gi, ri)]
            hmat = L.action_of_perm(G.elements[h_idx])
            m[new_pos * d:(new_pos + 1) * d, pos * d:(pos + 1) * d] = hmat
        mats.append(FpMatrix(m, L.p, _trusted=True))
    return Module(G, L.p, dim, mats, check=False)


def induce_hom(f: ModHom, G: grp.Group, H: grp.SubgroupHandle,
               ind_source: Optional[Module] = None,
               ind_target: Optional[Module] = None) -> ModHom:
    """Ind(f): block diagonal copy of f over each coset."""
    reps, _, _ = coset_data(G, H)
    nc = len(reps)
    src = ind_source if ind_source is not None else induce(f.source, G, H)
    tgt = ind_target if ind_target is not None else induce(f.target, G, H)
    m = np.kron(np.eye(nc, dtype=np.int64), f.matrix.a)
    return ModHom(src, tgt, FpMatrix(m, f.source.p, _trusted=True), check=False)


def restrict_hom(f: ModHom, H: grp.SubgroupHandle,
                 res_source: Optional[Module] = None,
                 res_target: Optional[Module] = None) -> ModHom:
    src = res_source if res_source is not None else restrict(f.source, H)
    tgt = res_target if res_target is not None else restrict(f.target, H)
    return ModHom(src, tgt, f.matrix, check=False)


# -- hom spaces by spinning ----------------------------------------------------


class _SpanTracker:
    """Row-space membership with incremental reduced echelon rows."""

    def __init__(self, width: int, p: int):
        self.width = width
        self.p = p
        self.rows: List[np.ndarray] = []
        self.pivots: List[int] = []

    def residue(self, v: np.ndarray) -> np.ndarray:
        w = v % self.p
        for r, pc in zip(self.rows, self.pivots):
            c = w[pc]
            if c:
                w = (w - c * r) % self.p
        return w

    def add(self, v: np.ndarray) -> bool:
        """Returns True when v was independent (and is now included)."""
        w = self.residue(np.asarray(v, dtype=np.int64))
        nz = np.nonzero(w)[0]
        if nz.size == 0:
            return False
        pc = int(nz[0])
        from .gfla import inv_mod
        w = (w * inv_mod(int(w[pc]), self.p)) % self.p
        self.rows.append(w)
        self.pivots.append(pc)
        return True


def _spin(M: Module):
    """Spin up a full basis of M from as few seed vectors as possible.

    Returns (B, defs, seed_positions): B is a dim x dim invertible matrix
    whose rows are the spun basis in discovery order; defs[k] is either
    ('seed', seed_number) or ('mul', parent_position, generator_position).
    """
    dim, p = M.dim, M.p
    gens = [m.a for m in M.gen_mats]
    tracker = _SpanTracker(dim, p)
    basis_rows: List[np.ndarray] = []
    defs: List[tuple] = []
    seed_positions: List[int] = []
    for j in range(dim):
        e = np.zeros(dim, dtype=np.int64)
        e[j] = 1
        if not tracker.add(e):
            continue
        seed_positions.append(len(basis_rows))
        defs.append(("seed", len(seed_positions) - 1))
        basis_rows.append(e)
        queue = [len(basis_rows) - 1]
        while queue:
            k = queue.pop(0)
            for gpos, A in enumerate(gens):
                v = matmul_mod(A, basis_rows[k].reshape(-1, 1), p).reshape(-1)
                if tracker.add(v):
                    defs.append(("mul", k, gpos))
                    basis_rows.append(v)
                    queue.append(len(basis_rows) - 1)
        if len(basis_rows) == dim:
            break
    B = np.array(basis_rows, dtype=np.int64)
    return B, defs, seed_positions


def hom_space(M: Module, N: Module) -> HomSpace:
    """Basis of the intertwiners M -> N, exact."""
    M._require_same_algebra(N)
    if M.dim == 0 or N.dim == 0:
        return HomSpace(M, N, [])
    p = M.p
    n = N.dim
    if not M.group.generators:
        # free algebra of a trivial group: every matrix intertwines
        units = [np.eye(1, n * M.dim, k, dtype=np.int64).reshape(n, M.dim)
                 for k in range(n * M.dim)]
        return HomSpace(M, N, units)
    B, defs, seeds = _spin(M)
    m = B.shape[0]
    r = len(seeds)
    Binv = FpMatrix(B, p, _trusted=True).inverse().a
    # W[k]: images F(b_k) as linear functions of the stacked seed images
    W = np.zeros((m, n, r * n), dtype=np.int64)
    for k, d in enumerate(defs):
        if d[0] == "seed":
            s = d[1]
            W[k, :, s * n:(s + 1) * n] = np.eye(n, dtype=np.int64)
        else:
            _, parent, gpos = d
            W[k] = matmul_mod(N.gen_mats[gpos].a, W[parent], p)
    acc = KernelAccumulator(r * n, p)
    for gpos, A in enumerate(M.gen_mats):
        prods = matmul_mod(A.a, B.T, p)          # columns: g . b_k
        coeffs = matmul_mod(Binv.T, prods, p)    # columns: coefficients in B
        lhs = batched_matmul_mod(
            np.broadcast_to(N.gen_mats[gpos].a, (m, n, n)), W, p)
        rhs = np.tensordot(coeffs.T, W, axes=(1, 0)) % p
        diff = (lhs - rhs) % p
        # rows coming from spinning-tree edges vanish identically
        acc.add_block(diff.reshape(m * n, r * n))
    ker = acc.kernel()
    basis = []
    for u in ker:
        P = np.tensordot(W, u, axes=(2, 0)) % p  # (m, n): row k = F(b_k)
        F = matmul_mod(Binv, P, p).T % p
        basis.append(F)
    return HomSpace(M, N, basis)


def end_space(M: Module) -> HomSpace:
    return hom_space(M, M)


# -- relative trace and projectivity ------------------------------------------


def _check_h_intertwiner(M: Module, N: Module, H: grp.SubgroupHandle,
                         f: np.ndarray) -> bool:
    for g in _handle_group(H).generators:
        a = M.action_of_perm(g)
        b = N.action_of_perm(g)
        if not np.array_equal(matmul_mod(f, a, M.p), matmul_mod(b, f, M.p)):
            return False
    return True


def relative_trace(M: Module, N: Module, H: grp.SubgroupHandle, f) -> ModHom:
    """Tr_H^G(f) = sum over coset reps g of rho_N(g) f rho_M(g^{-1}).

    f must intertwine the restrictions of M and N to H.
    """
    if isinstance(f, ModHom):
        f = f.matrix
    if isinstance(f, FpMatrix):
        f = f.a
    f = np.mod(np.asarray(f, dtype=np.int64), M.p)
    if f.shape != (N.dim, M.dim):
        raise DimensionError("trace argument has wrong shape")
    if not _check_h_intertwiner(M, N, H, f):
        raise InvariantViolation("argument is not an H-intertwiner")
    return ModHom(M, N, FpMatrix(_trace_stack(M, N, H, f[None])[0],
                                 M.p, _trusted=True), check=False)


def _trace_stack(M: Module, N: Module, H: grp.SubgroupHandle,
                 fs: np.ndarray) -> np.ndarray:
    """Relative traces of a stack of H-maps, batched over the stack."""
    G = M.group
    p = M.p
    reps, rep_indices, _ = coset_data(G, H)
    acc = np.zeros_like(fs)
    for ri in rep_indices:
        a = N.action_of(ri)
        b = M.action_of(G.inv(ri))
        acc = (acc + batched_matmul_mod(
            batched_matmul_mod(np.broadcast_to(a, (fs.shape[0],) + a.shape), fs, p),
            b, p)) % p
    return acc


def trace_image_subspace(M: Module, N: Module, H: grp.SubgroupHandle) -> Subspace:
    """Image of Tr_H^G on Hom_kH(Res M, Res N), inside the coordinate space
    of N.dim x M.dim matrices."""
    ambient = N.dim * M.dim
    if ambient == 0:
        return Subspace.zero(0, M.p)
    if _handle_group(H).generators:
        hs = hom_space(restrict(M, H), restrict(N, H))
        if not hs.basis:
            return Subspace.zero(ambient, M.p)
        fs = np.stack([b.matrix.a for b in hs.basis])
        traced = _trace_stack(M, N, H, fs)
        return Subspace(FpMatrix(traced.reshape(len(hs.basis), ambient), M.p,
                                 _trusted=True), ambient)
    # trivial subgroup: trace every matrix unit, in batches
    acc = KernelAccumulator(ambient, M.p)
    rows_done = []
    batch = max(1, 4096 // max(1, M.dim))
    units = []
    for a in range(N.dim):
        for b in range(M.dim):
            u = np.zeros((N.dim, M.dim), dtype=np.int64)
            u[a, b] = 1
            units.append(u)
            if len(units) == batch:
                traced = _trace_stack(M, N, H, np.stack(units))
                rows_done.append(traced.reshape(len(units), ambient))
                units = []
    if units:
        traced = _trace_stack(M, N, H, np.stack(units))
        rows_done.append(traced.reshape(len(units), ambient))
    stacked = np.vstack(rows_done)
    red, rank, _ = _rref_array(stacked, M.p)
    return Subspace(FpMatrix(red[:rank].copy(), M.p, _trusted=True), ambient,
                    _canonical=True)


def projective_hom_subspace(M: Module, N: Module,
                            coll: grp.SubgroupCollection) -> Subspace:
    """Sum over D in coll of the relative trace images; the collection-
    projective part of Hom_kG(M, N)."""
    ambient = N.dim * M.dim
    out = Subspace.zero(ambient, M.p)
    for D in coll:
        out = out.sum(trace_image_subspace(M, N, D))
    return out


class StableHom:
    """Quotient of a hom space by its collection-projective subspace."""

    def __init__(self, hom: HomSpace, projective: Subspace):
        self.hom = hom
        self.projective = projective
        self.dim = hom.dim - projective.dim
        picked = projective.extend_to([b.matrix.flatten_row() for b in hom.basis])
        self.representatives = [
            ModHom(hom.source, hom.target,
                   FpMatrix(v.reshape(hom.target.dim, hom.source.dim), hom.source.p),
                   check=False)
            for v in picked]

    def __repr__(self):
        return f"StableHom(dim={self.dim})"


def stable_hom(M: Module, N: Module, coll: grp.SubgroupCollection) -> StableHom:
    return StableHom(hom_space(M, N), projective_hom_subspace(M, N, coll))


# -- higman criteria ------------------------------------------------------------


def _trace_witness_search(M: Module, H: grp.SubgroupHandle,
                          tries: int = 24, seed: int = 0) -> bool:
    """Quick positive certificates for Id in the image of Tr_H^G."""
    p = M.p
    G = M.group
    index = G.order // H.order
    if index % p != 0:
        return True  # Tr of (1/index) Id is Id
    ResM = restrict(M, H)
    hs = hom_space(ResM, ResM)
    if not hs.basis:
        return M.dim == 0
    rng = np.random.default_rng(seed)
    candidates = []
    for b in hs.basis[: min(len(hs.basis), 40)]:
        candidates.append(b.matrix.a)
    for _ in range(tries):
        coeffs = rng.integers(0, p, size=len(hs.basis), dtype=np.int64)
        acc = np.zeros((M.dim, M.dim), dtype=np.int64)
        for c, b in zip(coeffs, hs.basis):
            acc = (acc + int(c) * b.matrix.a) % p
        candidates.append(acc)
    ident = np.eye(M.dim, dtype=np.int64)
    for f in candidates:
        t = _trace_stack(M, M, H, f[None])[0]
        if np.array_equal(t, ident):
            return True
        # invertible trace certifies too: Id = Tr(f) Tr(f)^{-1} = Tr(f Res(...))
        tm = FpMatrix(t, p, _trusted=True)
        if M.dim and tm.is_invertible():
            return True
    return False


def higman_via_trace(M: Module, H: grp.SubgroupHandle) -> bool:
    """Id_M in the image of the relative trace, decided exactly."""
    if M.dim == 0:
        return True
    if _trace_witness_search(M, H):
        return True
    img = trace_image_subspace(M, M, H)
    ident = np.eye(M.dim, dtype=np.int64).reshape(-1)
    return img.contains_vector(ident)


def higman_via_summand(M: Module, H: grp.SubgroupHandle) -> bool:
    """Is M a direct summand of Ind Res M, decided by Krull-Schmidt data."""
    from . import dec  # local import; dec builds on this module
    if M.dim == 0:
        return True
    decomp = dec.decompose(M)
    for summand, mult in decomp.summands:
        got = _induced_multiplicity(summand, M, H)
        if got < mult:
            return False
    return True


def _induced_multiplicity(U: Module, M: Module, H: grp.SubgroupHandle) -> int:
    """Multiplicity of the indecomposable U in Ind_H^G Res_H^G M.

    Uses the adjunction isomorphisms to avoid materializing the induced
    module: every map U -> Ind Res M corresponds to an H-map Res U -> Res M
    and the composite pairing through U is the relative trace of the
    composite.  The multiplicity is the rank of the residue pairing.
    """
    from . import dec
    ResU = restrict(U, H)
    ResM = restrict(M, H)
    A1 = hom_space(ResU, ResM)
    A2 = hom_space(ResM, ResU)
    if A1.dim == 0 or A2.dim == 0:
        return 0
    endU = dec.endo_algebra(U)
    pi, e = endU.residue_projection()
    rows = []
    for g in A2.basis:
        comps = np.stack([matmul_mod(g.matrix.a, f.matrix.a, U.p)
                          for f in A1.basis])
        traced = _trace_stack(U, U, H, comps)
        rows.append(np.concatenate([pi(t) for t in traced]))
    phi = np.array(rows, dtype=np.int64)
    red, rank, _ = _rref_array(phi, U.p)
    if rank % e != 0:
        raise InvariantViolation("residue pairing rank not divisible by "
                                 "the residue degree")
    return rank // e


def higman_tests(M: Module, H: grp.SubgroupHandle) -> Tuple[bool, bool]:
    """(via_trace, via_summand); Higman's criterion says they agree."""
    via_trace = higman_via_trace(M, H)
    via_summand = higman_via_summand(M, H)
    return via_trace, via_summand


# -- mackey, frobenius, adjunctions ---------------------------------------------


class MackeyResult:
    def __init__(self, summands, modules_sum, induced_restricted, iso):
        self.summands = summands          # list of (rep t, K-module)
        self.sum_module = modules_sum     # direct sum of the summands
        self.restricted = induced_restricted
        self.iso = iso                    # ModHom sum_module -> restricted

    def __repr__(self):
        dims = [m.dim for _, m in self.summands]
        return f"MackeyResult(dims={dims})"


def conjugated_module(L: Module, G: grp.Group, H: grp.SubgroupHandle,
                      t: grp.Perm, J: grp.SubgroupHandle) -> Module:
    """The twist t (x) L as a module over J <= t H t^{-1}: u acts through
    rho_L(t^{-1} u t)."""
    Jgrp = _handle_group(J)
    mats = []
    tinv = t.inverse()
    for u in Jgrp.generators:
        h = tinv * u * t
        mats.append(FpMatrix(L.action_of_perm(h).copy(), L.p, _trusted=True))
    return Module(Jgrp, L.p, L.dim, mats, check=False)


def mackey_decomposition(L: Module, G: grp.Group, H: grp.SubgroupHandle,
                         K: grp.SubgroupHandle) -> MackeyResult:
    """Res_K Ind_H L decomposed over canonical K-H double coset reps, with
    an explicit invertible K-intertwiner built from the factorizations
    g = k t h."""
    if H.parent != G or K.parent != G:
        raise ContainmentError("subgroups must live in G")
    IndL = induce(L, G, H)
    ResInd = restrict(IndL, K)
    reps_G, rep_indices_G, table_G = coset_data(G, H)
    d = L.dim
    dreps = grp.double_coset_reps(K, G, H)
    summands = []
    columns = []
    Kgrp = _handle_group(K)
    for t in dreps:
        ti = G.index_of(t)
        tH = grp.conjugate_subgroup(H, t)
        J = grp.intersect(K, tH)
        twisted = conjugated_module(L, G, H, t, J)
        summand = induce(twisted, Kgrp, _subhandle_in(Kgrp, J))
        summands.append((t, summand))
        # basis s_m (x) e_j of the summand maps to s_m t (x) e_j upstairs
        sreps, srep_idx, _ = coset_data(Kgrp, _subhandle_in(Kgrp, J))
        for s in sreps:
            g = s * t
            pos, h_idx = table_G[G.index_of(g)]
            hmat = L.action_of(h_idx)
            col_block = np.zeros((IndL.dim, d), dtype=np.int64)
            col_block[pos * d:(pos + 1) * d, :] = hmat
            columns.append(col_block)
    total = np.hstack(columns) if columns else np.zeros((IndL.dim, 0), dtype=np.int64)
    sum_module = direct_sum(*[m for _, m in summands]) if summands else \
        zero_module(Kgrp, L.p)
    iso = ModHom(sum_module, ResInd, FpMatrix(total, L.p, _trusted=True),
                 check=True)
    if not iso.is_invertible():
        raise InvariantViolation("Mackey isomorphism is singular")
    return MackeyResult(summands, sum_module, ResInd, iso)


def _subhandle_in(Kgrp: grp.Group, J: grp.SubgroupHandle) -> grp.SubgroupHandle:
    """Re-express a subgroup handle inside the standalone group built from
    its overgroup handle."""
    return Kgrp.subgroup([J.parent.elements[i] for i in J.element_indices])


def frobenius_iso(X: Module, Y: Module, G: grp.Group,
                  H: grp.SubgroupHandle) -> ModHom:
    """Natural isomorphism X (x) Ind Y -> Ind(Res X (x) Y), given on basis
    vectors by x (x) (g (x) y) -> g (x) (g^{-1} x (x) y)."""
    if X.group != G:
        raise CompatibilityError("X must be a G-module")
    IndY = induce(Y, G, H)
    lhs = tensor(X, IndY)
    ResX = restrict(X, H)
    rhs = induce(tensor(ResX, Y), G, H)
    reps, rep_indices, _ = coset_data(G, H)
    nX, nY, nc = X.dim, Y.dim, len(reps)
    mat = np.zeros((rhs.dim, lhs.dim), dtype=np.int64)
    for a in range(nX):
        for i, ri in enumerate(rep_indices):
            ginv = X.action_of(G.inv(ri))
            for j in range(nY):
                src = a * (nc * nY) + i * nY + j
                # g^{-1} x_a = sum_c ginv[c, a] x_c
                for c in np.nonzero(ginv[:, a])[0]:
                    dst = i * (nX * nY) + c * nY + j
                    mat[dst, src] = ginv[c, a]
    out = ModHom(lhs, rhs, FpMatrix(mat, X.p, _trusted=True), check=True)
    if not out.is_invertible():
        raise InvariantViolation("Frobenius map is singular")
    return out


class AdjunctionMaps:
    """The four unit/counit builders for a fixed pair H <= G."""

    def __init__(self, G: grp.Group, H: grp.SubgroupHandle, p: int):
        if H.parent != G:
            raise ContainmentError("subgroup handle is not inside G")
        self.G, self.H, self.p = G, H, p

    def eps(self, Y: Module) -> ModHom:
        """Y -> Res Ind Y, y -> 1 (x) y (identity coset block)."""
        IndY = induce(Y, self.G, self.H)
        ResInd = restrict(IndY, self.H)
        m = np.zeros((ResInd.dim, Y.dim), dtype=np.int64)
        m[:Y.dim, :] = np.eye(Y.dim, dtype=np.int64)
        return ModHom(Y, ResInd, FpMatrix(m, self.p, _trusted=True))

    def eta(self, X: Module) -> ModHom:
        """Ind Res X -> X, g (x) x -> g x."""
        ResX = restrict(X, self.H)
        IndRes = induce(ResX, self.G, self.H)
        reps, rep_indices, _ = coset_data(self.G, self.H)
        blocks = [X.action_of(ri) for ri in rep_indices]
        m = np.hstack(blocks)
        return ModHom(IndRes, X, FpMatrix(m, self.p, _trusted=True))

    def eps_prime(self, X: Module) -> ModHom:
        """X -> Ind Res X, x -> sum over cosets g (x) g^{-1} x."""
        ResX = restrict(X, self.H)
        IndRes = induce(ResX, self.G, self.H)
        reps, rep_indices, _ = coset_data(self.G, self.H)
        blocks = [X.action_of(self.G.inv(ri)) for ri in rep_indices]
        m = np.vstack(blocks)
        return ModHom(X, IndRes, FpMatrix(m, self.p, _trusted=True))

    def eta_prime(self, Y: Module) -> ModHom:
        """Res Ind Y -> Y, projection to the identity coset component."""
        IndY = induce(Y, self.G, self.H)
        ResInd = restrict(IndY, self.H)
        m = np.zeros((Y.dim, ResInd.dim), dtype=np.int64)
        m[:, :Y.dim] = np.eye(Y.dim, dtype=np.int64)
        return ModHom(ResInd, Y, FpMatrix(m, self.p, _trusted=True))

    # the two hom-space bijections

    def adj1(self, f: ModHom, X: Module) -> ModHom:
        """Hom_H(Y, Res X) -> Hom_G(Ind Y, X): f -> eta_X . Ind(f)."""
        IndY = induce(f.source, self.G, self.H)
        IndResX = induce(f.target, self.G, self.H)
        indf = induce_hom(f, self.G, self.H, ind_source=IndY, ind_target=IndResX)
        return self.eta(X) @ indf

    def adj1_inverse(self, g: ModHom, Y: Module) -> ModHom:
        """Hom_G(Ind Y, X) -> Hom_H(Y, Res X): g -> Res(g) . eps_Y."""
        resg = restrict_hom(g, self.H)
        return resg @ self.eps(Y)

    def adj2(self, f: ModHom, X: Module) -> ModHom:
        """Hom_H(Res X, Y) -> Hom_G(X, Ind Y): f -> Ind(f) . eps'_X."""
        indf = induce_hom(f, self.G, self.H)
        return indf @ self.eps_prime(X)

    def adj2_inverse(self, g: ModHom, Y: Module) -> ModHom:
        """Hom_G(X, Ind Y) -> Hom_H(Res X, Y): g -> eta'_Y . Res(g)."""
        resg = restrict_hom(g, self.H)
        return self.eta_prime(Y) @ resg


def adjunction_units(G: grp.Group, H: grp.SubgroupHandle, p: int) -> AdjunctionMaps:
    return AdjunctionMaps(G, H, p)


# -- trace and unit maps ----------------------------------------------------------


def trace_unit_maps(V: Module) -> Tuple[ModHom, ModHom]:
    """(Tr, iota): evaluation V^# (x) V -> k and the dual-basis unit
    k -> V^# (x) V; the zig-zag through the swap is the identity."""
    DV = dual(V)
    T = tensor(DV, V)
    k = trivial(V.group, V.p)
    d = V.dim
    tr = np.zeros((1, d * d), dtype=np.int64)
    un = np.zeros((d * d, 1), dtype=np.int64)
    for i in range(d):
        tr[0, i * d + i] = 1
        un[i * d + i, 0] = 1
    Tr = ModHom(T, k, FpMatrix(tr, V.p, _trusted=True))
    iota = ModHom(k, T, FpMatrix(un, V.p, _trusted=True))
    return Tr, iota


def swap_tensor_factors(M: Module, N: Module) -> ModHom:
    """The flip M (x) N -> N (x) M on Kronecker coordinates."""
    MN = tensor(M, N)
    NM = tensor(N, M)
    m = np.zeros((NM.dim, MN.dim), dtype=np.int64)
    for a in range(M.dim):
        for b in range(N.dim):
            m[b * M.dim + a, a * N.dim + b] = 1
    return ModHom(MN, NM, FpMatrix(m, M.p, _trusted=True), check=False)


def zigzag_composite(V: Module) -> ModHom:
    """(1 (x) Tr) . (swap first factors) . (iota (x) 1) : V -> V."""
    Tr, iota = trace_unit_maps(V)
    DV = dual(V)
    T = Tr.source           # V^# (x) V
    lhs = tensor(T, V)      # (V^# (x) V) (x) V
    # step 1: iota (x) 1 : V -> T (x) V
    step1 = ModHom(V, lhs, FpMatrix(np.kron(iota.matrix.a,
                                            np.eye(V.dim, dtype=np.int64)),
                                    V.p, _trusted=True), check=False)
    # step 2: swap the first two tensor slots: (V^# x V) x V -> V x (V^# x V)
    d = V.dim
    swap = np.zeros((d * d * d, d * d * d), dtype=np.int64)
    for a in range(d):      # V^# index
        for b in range(d):  # first V index
            for c in range(d):  # second V index
                src = (a * d + b) * d + c
                dst = (b * d + a) * d + c
                swap[dst, src] = 1
    mid = tensor(V, T)
    step2 = ModHom(lhs, mid, FpMatrix(swap, V.p, _trusted=True), check=False)
    # step 3: 1 (x) Tr : V (x) (V^# (x) V) -> V
    step3 = ModHom(mid, V, FpMatrix(np.kron(np.eye(V.dim, dtype=np.int64),
                                            Tr.matrix.a),
                                    V.p, _trusted=True), check=False)
    return step3 @ step2 @ step1


# -- module file format -------------------------------------------------------------


def save_module_json(path: str, M: Module, group_path: Optional[str] = None):
    if group_path is not None:
        group_spec = group_path
    else:
        group_spec = {"degree": M.group.degree,
                      "generators": [g.cycle_string() for g in M.group.generators]}
    doc = {"p": M.p, "group": group_spec, "dim": M.dim,
           "generators": [m.a.reshape(-1).tolist() for m in M.gen_mats]}
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=1, sort_keys=True)
        fh.write("\n")


def load_module_json(path: str) -> Module:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: invalid JSON ({exc})") from None
    return module_from_doc(doc, base_dir=os.path.dirname(os.path.abspath(path)))


def module_from_doc(doc: dict, base_dir: str = ".") -> Module:
    for key in ("p", "group", "dim", "generators"):
        if key not in doc:
            raise ParseError(f"module document missing key {key!r}")
    p = int(doc["p"])
    gspec = doc["group"]
    if isinstance(gspec, str):
        gpath = gspec if os.path.isabs(gspec) else os.path.join(base_dir, gspec)
        G, _ = grp.load_group_file(gpath)
    elif isinstance(gspec, dict):
        degree = int(gspec["degree"])
        gens = [grp.parse_cycle_notation(s, degree) for s in gspec["generators"]]
        G = grp.Group(degree, gens)
    else:
        raise ParseError("module 'group' must be a path or an inline object")
    dim = int(doc["dim"])
    mats = []
    for flat in doc["generators"]:
        arr = np.asarray(flat, dtype=np.int64)
        if arr.size != dim * dim:
            raise ParseError("generator matrix has wrong size")
        mats.append(FpMatrix(arr.reshape(dim, dim), p))
    return Module(G, p, dim, mats, check=True)


# -- seeded sampling ---------------------------------------------------------------


def spin_submodule(M: Module, vectors: Sequence[np.ndarray]) -> Module:
    """Submodule generated by the given vectors, as a standalone module
    with the spun basis; deterministic for a fixed input order."""
    p = M.p
    tracker = _SpanTracker(M.dim, p)
    rows: List[np.ndarray] = []
    queue: List[int] = []
    for v in vectors:
        v = np.mod(np.asarray(v, dtype=np.int64).reshape(-1), p)
        if tracker.add(v):
            rows.append(v)
            queue.append(len(rows) - 1)
    while queue:
        k = queue.pop(0)
        for A in M.gen_mats:
            w = matmul_mod(A.a, rows[k].reshape(-1, 1), p).reshape(-1)
            if tracker.add(w):
                rows.append(w)
                queue.append(len(rows) - 1)
    if not rows:
        return zero_module(M.group, p)
    B = np.array(rows, dtype=np.int64)
    # action in the spun basis: solve B^T C = A B^T
    Bm = FpMatrix(B, p, _trusted=True)
    mats = []
    from .gfla import solve
    for A in M.gen_mats:
        rhs = matmul_mod(A.a, B.T, p)
        sol = solve(Bm.T, FpMatrix(rhs, p, _trusted=True))
        if sol.solution is None:
            raise InvariantViolation("span is not invariant; spinning bug")
        mats.append(FpMatrix(sol.solution.a.copy(), p, _trusted=True))
    return Module(M.group, p, B.shape[0], mats, check=False)


def random_module(G: grp.Group, p: int, max_dim: int,
                  rng: np.random.Generator) -> Module:
    """Seeded random module: a spun submodule of a permutation module.

    Falls back to the trivial module when nothing of dimension <= max_dim
    shows up within a few draws.
    """
    subs = grp.all_subgroups_up_to_conjugacy(G)
    handles = [h for h in subs if h.order > 1]
    for _ in range(24):
        if handles:
            H = handles[int(rng.integers(0, len(handles)))]
        else:
            H = G.full_subgroup()
        P = permutation_module(G, H, p)
        v = rng.integers(0, p, size=P.dim, dtype=np.int64)
        if not v.any():
            continue
        S = spin_submodule(P, [v])
        if 1 <= S.dim <= max_dim:
            return S
    return trivial(G, p)
