"""Pfaffian and determinant line bundles of antisymmetric matrix families.

A family b -> A(b) of complex antisymmetric N x N matrices (the bilinear
form <(JD)+ . , . > of a real Dirac family at finite rank) has
Delta+ = A^H A with Kramers-paired spectrum.  Over the open set where
lambda^2 avoids the spectrum, the sub-lambda eigenspace bundle H+_lambda
carries a smooth frame, and the glued line bundles are

    Pfaff_lambda = det(H+_lambda),      transitions  Pf(G^T A G)^(-1) ...
    det_lambda   = det(H+)^-1 (x) det(H-),  transitions  det(G-^H A G+) ...

with band frames G obtained by projecting a reference frame and
orthonormalizing; H- frames come from H+ frames through A itself.  Patch
sections are normalized to unit Quillen norm (||s_can||^2 = det(Delta+)),
which makes all transitions U(1)-valued.

Two patch connections are exposed: "eta" (the geometric one; on each patch
the frame traces plus 2 pi i times the eta one-form of the above-cut
spectral sectors, which restricts to -pi i eta^1 on the canonical section
over the invertible locus and is exactly compatible with the transitions)
and "projected" (plain induced frame traces; its deviation from the eta
convention is a measured quantity, not an identity).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from . import ad, forms
from .eta import HermitianPairFamily, SpectralGapError, eta1_family
from .forms import ScalarFormField
from .geom import ChartedDomain, Circle, make_product
from .lbundle import LineBundleCocycle, Patch

__all__ = [
    "pfaffian", "SkewFamily", "SpectralCut", "spectral_cut",
    "pfaff_bundle", "det_bundle", "quillen_report",
    "skew_family_to_json", "skew_family_from_json", "SpectralCutError",
]


class SpectralCutError(ValueError):
    pass


def pfaffian(A, atol=1e-10):
    """Pfaffian of a complex antisymmetric matrix by skew-symmetric
    tridiagonalization with partial pivoting (Parlett-Reid updates).

    Pf(A)^2 = det(A); Pf([[0, a], [-a, 0]]) = a.
    """
    A = np.array(A, dtype=complex)
    n = A.shape[0]
    if n % 2:
        raise ValueError("Pfaffian requires even matrix size")
    if n == 0:
        return 1.0 + 0.0j
    scale = max(np.max(np.abs(A)), 1.0)
    if np.max(np.abs(A + A.T)) > atol * scale:
        raise ValueError("matrix is not antisymmetric")
    A = 0.5 * (A - A.T)
    pf = 1.0 + 0.0j
    for k in range(0, n - 1, 2):
        kp = k + 1 + int(np.argmax(np.abs(A[k + 1:, k])))
        if kp != k + 1:
            A[[k + 1, kp], :] = A[[kp, k + 1], :]
            A[:, [k + 1, kp]] = A[:, [kp, k + 1]]
            pf = -pf
        if A[k + 1, k] == 0:
            return 0.0 + 0.0j
        pf = pf * A[k, k + 1]
        if k + 2 < n:
            tau = A[k, k + 2:] / A[k, k + 1]
            w = A[k + 2:, k + 1]
            A[k + 2:, k + 2:] += np.outer(tau, w) - np.outer(w, tau)
    return pf


def _pf_with_jet(M):
    """Pfaffian of a (possibly jet-valued) antisymmetric matrix;
    d log Pf = (1/2) tr(M^{-1} dM)."""
    if not isinstance(M, ad.Jet):
        return pfaffian(M)
    val = pfaffian(ad.value_of_deep(M))
    Minv = np.linalg.inv(ad.value_of_deep(M))
    jac = [val * 0.5 * np.trace(Minv @ ad.value_of_deep(dm)) for dm in M.jac]
    return ad.Jet(val, jac)


def _det_with_jet(M):
    if not isinstance(M, ad.Jet):
        return np.linalg.det(M)
    val = np.linalg.det(M.val)
    Minv = np.linalg.inv(M.val)
    return ad.Jet(val, [val * np.trace(Minv @ dm) for dm in M.jac])


def _gs_columns(X, k):
    """Gram-Schmidt with positive diagonal, column count k (jet-aware)."""
    cols = []
    for c in range(k):
        v = X[..., :, c]
        for u in cols:
            coef = ad.asum(ad.conj(u) * v, -1)
            v = v - coef * u
        nrm = ad.sqrt(ad.real(ad.asum(ad.conj(v) * v, -1)))
        cols.append(v / nrm)
    if not cols:
        shape = np.shape(ad.value_of_deep(X))[:-1] + (0,)
        return np.zeros(shape, dtype=complex)
    return ad.stack(cols, -1)


def _projector_jet(H, lam2):
    """Spectral projector onto eigenvalues below lam2, with first
    derivatives from cross-gap perturbation theory."""
    if not isinstance(H, ad.Jet):
        w, V = np.linalg.eigh(H)
        S = w < lam2
        return V[:, S] @ V[:, S].conj().T, int(S.sum())
    Hv = H.val
    N = Hv.shape[-1]
    w, V = np.linalg.eigh(Hv)
    S = w < lam2
    P = V[:, S] @ V[:, S].conj().T
    jac = []
    for dH in H.jac:
        dHv = ad.value_of_deep(dH)
        if np.ndim(dHv) == 0:
            jac.append(np.zeros_like(P))
            continue
        M = V.conj().T @ dHv @ V
        K = np.zeros((N, N), dtype=complex)
        for i in range(N):
            if not S[i]:
                continue
            for j in range(N):
                if S[j]:
                    continue
                K[j, i] = M[j, i] / (w[i] - w[j])
        jac.append(V @ (K + K.conj().T) @ V.conj().T)
    return ad.Jet(P, jac), int(S.sum())


@dataclass
class SkewFamily:
    """Base-parametrized complex antisymmetric family with spectral-cut
    machinery.  ``A`` maps base coords to (..., N, N) antisymmetric
    matrices; an optional graded ambient connection (a one-form field on
    C^{2N} with parity (N, N)) twists the frame transports and eta forms."""

    base: ChartedDomain
    N: int
    A: Callable
    amb: Optional[object] = None

    def __post_init__(self):
        if self.N % 2:
            raise ValueError("family size must be even")
        if self.base.dim not in (1, 2):
            raise ValueError("base dimension must be 1 or 2")
        rng = np.random.default_rng(12)
        pts = self.base.random_points(rng, 6)
        Av = ad.value_of_deep(self.A(pts))
        anti = np.max(np.abs(Av + np.swapaxes(Av, -1, -2)))
        if anti > 1e-12 * max(1.0, np.max(np.abs(Av))):
            raise ValueError(f"family is not antisymmetric ({anti:.2e})")

    def hermitian_pair(self):
        """The family viewed through its odd selfadjoint taming (for eta
        forms)."""
        return HermitianPairFamily(self.base, self.N, self.A, conn=self.amb)

    def delta_plus(self, coords):
        Aj = self.A(coords)
        return ad.matmul(ad.conj(ad.transpose(Aj)), Aj)

    def spectrum_scan(self, per_axis=96):
        nodes = _scan_nodes(self.base, per_axis)
        vals = np.stack([np.linalg.eigvalsh(
            ad.value_of_deep(self.delta_plus(pt))) for pt in nodes])
        return nodes, vals

    def norm_bound(self, per_axis=64):
        _, vals = self.spectrum_scan(per_axis)
        return float(np.max(vals))


def _scan_nodes(base, per_axis):
    axes = []
    for a in base.axes:
        if a.periodic:
            axes.append(np.arange(per_axis) * a.period / per_axis)
        else:
            axes.append(np.linspace(np.min(a.nodes), np.max(a.nodes), per_axis))
    mesh = np.meshgrid(*axes, indexing="ij")
    flat = [m.ravel() for m in mesh]
    return [tuple(f[i] for f in flat) for i in range(flat[0].size)]


@dataclass
class SpectralCut:
    """Gapped spectral cut: the region where lambda^2 avoids spec(Delta+),
    with smooth frames of the sub-lambda eigenspace bundle.

    Node frames come from Kato projector transport along the region's scan
    chain; the continuous frame projects the mid-region reference through
    the pointwise spectral projector and re-orthonormalizes (jet-capable).
    """

    family: SkewFamily
    lam: float
    gap_min: float
    region: dict
    rank: int = 0
    nodes: list = field(default_factory=list)
    node_frames: list = field(default_factory=list)
    ref_plus: np.ndarray = None
    ref_minus: np.ndarray = None
    smoothness_constant: float = 0.0

    def frame_plus(self, coords):
        P, k = _projector_jet(self.family.delta_plus(coords), self.lam ** 2)
        if k != self.rank:
            raise SpectralCutError(
                f"rank {k} at {coords} differs from cut rank {self.rank}")
        if self.rank == 0:
            return np.zeros((self.family.N, 0), dtype=complex)
        return _gs_columns(ad.matmul(P, self.ref_plus), self.rank)

    def frame_minus(self, coords):
        Aj = self.family.A(coords)
        H = ad.matmul(Aj, ad.conj(ad.transpose(Aj)))
        P, k = _projector_jet(H, self.lam ** 2)
        if self.rank == 0:
            return np.zeros((self.family.N, 0), dtype=complex)
        return _gs_columns(ad.matmul(P, self.ref_minus), self.rank)


def spectral_cut(family, lam, gap_min=None, region=None, per_axis=128):
    """Spectral cut at level ``lam`` over ``region`` (default: whole base).

    Fails loudly when lambda^2 comes within ``gap_min`` (default
    1e-4 x max ||A||^2) of the spectrum at any scanned node, or when the
    sub-lambda rank is not constant.
    """
    region = region or {}
    if gap_min is None:
        gap_min = 1e-4 * family.norm_bound()
    patch = Patch("cut", region)
    nodes = [pt for pt in _scan_nodes(family.base, per_axis)
             if bool(patch.contains(family.base, pt))]
    if not nodes:
        raise SpectralCutError("region contains no scan nodes")
    lam2 = lam ** 2
    spectra = []
    for pt in nodes:
        H = ad.value_of_deep(family.delta_plus(pt))
        w, V = np.linalg.eigh(H)
        gap = np.min(np.abs(w - lam2))
        if gap < gap_min:
            raise SpectralGapError(
                f"eigenvalue {w[np.argmin(np.abs(w - lam2))]:.6f} within "
                f"{gap:.2e} of lambda^2 = {lam2:.6f} at node {pt}")
        spectra.append((w, V))
    ranks = [int(np.sum(w < lam2)) for w, _ in spectra]
    if len(set(ranks)) != 1:
        raise SpectralCutError(
            f"sub-cut rank not constant over region: {sorted(set(ranks))}")
    rank = ranks[0]
    frames = []
    prev = None
    smooth_c = 0.0
    for (w, V) in spectra:
        S = w < lam2
        if prev is None:
            F = V[:, S]
        else:
            P = V[:, S] @ V[:, S].conj().T
            F = np.asarray(ad.value_of_deep(_gs_columns(P @ prev, rank)))
        if prev is not None and F.size:
            smooth_c = max(smooth_c, float(np.max(np.abs(F - prev))))
        frames.append(F)
        prev = F
    mid = len(nodes) // 2
    ref_plus = frames[mid]
    if rank:
        Amid = ad.value_of_deep(family.A(nodes[mid]))
        ref_minus = np.asarray(ad.value_of_deep(
            _gs_columns(Amid @ ref_plus, rank)))
    else:
        ref_minus = np.zeros((family.N, 0), dtype=complex)
    cut = SpectralCut(family, lam, gap_min, region, rank, nodes, frames,
                      ref_plus, ref_minus, smooth_c)
    # validate the mid-reference construction over the whole region
    if rank:
        for pt in nodes[::4]:
            P, _ = _projector_jet(ad.value_of_deep(family.delta_plus(pt)), lam2)
            sv = np.linalg.svd(P @ ref_plus, compute_uv=False)
            if sv.min() < 0.1:
                raise SpectralCutError(
                    "reference frame degenerates over the region; use "
                    "narrower cut regions")
    return cut


# -- glued bundles -------------------------------------------------------------

def _coords_point_iter(coords):
    arrs = [np.atleast_1d(np.asarray(c, dtype=float)) for c in coords]
    shape = np.broadcast_shapes(*[a.shape for a in arrs])
    arrs = [np.broadcast_to(a, shape).ravel() for a in arrs]
    n = arrs[0].size if arrs else 1
    for i in range(n):
        yield tuple(a[i] for a in arrs)


def _is_jet_coords(coords):
    return any(isinstance(c, ad.Jet) for c in coords)


def _frame_trace(F):
    """tr(F^H dF) as one-form coefficients (F a jet over seeded coords)."""
    if not isinstance(F, ad.Jet) or F.val.shape[-1] == 0:
        return None
    Fv = F.val
    return [np.trace(Fv.conj().T @ ad.value_of_deep(dF))
            if np.ndim(ad.value_of_deep(dF)) else 0.0 for dF in F.jac]


def _cut_above_eta(family, lam):
    return eta1_family(family.hermitian_pair(), above=lam)


def _quillen_m(cut, coords):
    """det(Delta+ restricted above the cut) = det((1-P) Delta (1-P) + P)."""
    H = ad.value_of_deep(cut.family.delta_plus(coords))
    if cut.rank == 0:
        return np.real(np.linalg.det(H))
    P, _ = _projector_jet(H, cut.lam ** 2)
    N = cut.family.N
    M = (np.eye(N) - P) @ H @ (np.eye(N) - P) + P
    return np.real(np.linalg.det(M))


def _band_frames(family, cut_lo, cut_hi, ref_band, coords):
    """(G+, G-) spanning the spectral band (lam_lo^2, lam_hi^2]."""
    H = family.delta_plus(coords)
    P_hi, _ = _projector_jet(H, cut_hi.lam ** 2)
    P_lo, _ = _projector_jet(H, cut_lo.lam ** 2)
    r = cut_hi.rank - cut_lo.rank
    Pband = P_hi - P_lo if cut_lo.rank else P_hi
    Gp = _gs_columns(ad.matmul(Pband, ref_band), r)
    Aj = family.A(coords)
    Gm = _gs_columns(ad.matmul(Aj, Gp), r)
    return Gp, Gm


def _band_reference(family, cut_lo, cut_hi, overlap_mid):
    H = ad.value_of_deep(family.delta_plus(overlap_mid))
    w, V = np.linalg.eigh(H)
    S = (w > cut_lo.lam ** 2) & (w < cut_hi.lam ** 2)
    if int(S.sum()) != cut_hi.rank - cut_lo.rank:
        raise SpectralCutError("band rank mismatch on the overlap")
    return V[:, S]


def _overlap_mid(base, reg_a, reg_b):
    """A point inside both regions (scan search)."""
    pa, pb = Patch("a", reg_a), Patch("b", reg_b)
    for pt in _scan_nodes(base, 192):
        if bool(pa.contains(base, pt, margin=1e-9)) and \
           bool(pb.contains(base, pt, margin=1e-9)):
            return pt
    raise SpectralCutError("cut regions do not overlap")


def _glued_bundle(family, cuts, kind, convention="eta"):
    if family.base.dim != 1:
        raise NotImplementedError(
            "glued bundles are implemented for one-dimensional bases")
    cut_objs = []
    for spec in cuts:
        lam, region = spec if isinstance(spec, tuple) else (spec, {})
        cut_objs.append(spectral_cut(family, lam, region=region))
    order = np.argsort([c.lam for c in cut_objs])
    cut_objs = [cut_objs[i] for i in order]

    # coverage check on the base grid
    patches = [Patch(f"lam={c.lam:g}", c.region) for c in cut_objs]
    gpts, _ = family.base.grid()
    cover = np.zeros(gpts[0].size, dtype=bool)
    for p in patches:
        cover |= np.asarray(p.contains(family.base, gpts))
    if not np.all(cover):
        raise SpectralCutError("cut regions do not cover the base")

    eta_above = {id(c): _cut_above_eta(family, c.lam) for c in cut_objs}

    def omega_field(cut):
        def func(coords):
            comps = {}
            pts = list(_coords_point_iter(coords))
            vals = {k: np.zeros(len(pts), dtype=complex)
                    for k in range(family.base.dim)}
            for idx, pt in enumerate(pts):
                jets = ad.seed(pt)
                if kind == "pfaff" and convention == "eta":
                    # omega = -i d arg( Pf(A) / Pf(F+^T A F+) ): smooth on
                    # the cut region, equal to -pi i eta^1 where the frame
                    # is empty, exactly compatible with the Pfaffian
                    # transitions (Pf block multiplicativity)
                    for k, w in enumerate(_pf_arg_derivative(cut, jets)):
                        vals[k][idx] = w
                    continue
                Fp = cut.frame_plus(jets)
                Fm = cut.frame_minus(jets)
                tp = _frame_trace(Fp)
                tm = _frame_trace(Fm)
                if kind == "pfaff":  # projected convention
                    for k in range(family.base.dim):
                        vals[k][idx] = 0.0 if tp is None else tp[k]
                    continue
                e_ab = eta_above[id(cut)].eval(pt)
                for k in range(family.base.dim):
                    w_det = 2j * np.pi * e_ab.comps.get(1 << k, 0.0)
                    if convention == "projected":
                        w_det = 0.0
                    if tp is not None:
                        w_det = w_det - tp[k]
                    if tm is not None:
                        w_det = w_det + tm[k]
                    vals[k][idx] = w_det
            shape = np.broadcast_shapes(*[np.shape(c) for c in coords])
            for k in range(family.base.dim):
                comps[1 << k] = vals[k].reshape(shape) if shape else vals[k][0]
            return forms.ScalarForm(family.base.dim, comps)
        return ScalarFormField(family.base, func, declared_degrees={1})

    connections = [omega_field(c) for c in cut_objs]

    transitions = {}
    for i in range(len(cut_objs)):
        for j in range(i + 1, len(cut_objs)):
            lo, hi = cut_objs[i], cut_objs[j]
            try:
                mid = _overlap_mid(family.base, lo.region, hi.region)
            except SpectralCutError:
                continue  # disjoint patches carry no transition
            ref_band = _band_reference(family, lo, hi, mid)
            transitions[(i, j)] = _transition_fun(
                family, lo, hi, ref_band, kind)

    bundle = LineBundleCocycle(family.base, patches, transitions, connections)
    bundle._cuts = cut_objs
    bundle._kind = kind
    return bundle


def _pf_arg_derivative(cut, jets):
    """Coefficients of -i d arg( Pf(A) / Pf(F+^T A F+) ) at a jet point."""
    dim = cut.family.base.dim
    Aj = cut.family.A(jets)
    pfA = _pf_with_jet(Aj)
    if cut.rank:
        Fp = cut.frame_plus(jets)
        M = ad.matmul(ad.transpose(Fp), ad.matmul(Aj, Fp))
        pfM = _pf_with_jet(M)
        ratio = pfA / pfM
    else:
        ratio = pfA
    if not isinstance(ratio, ad.Jet):
        return [0.0] * dim  # constant family
    out = []
    rv = ratio.val
    for k in range(dim):
        dr = ratio.jac[k]
        out.append(-1j * np.imag(dr / rv))
    return out


def _transition_fun(family, lo, hi, ref_band, kind):
    def cfun(coords):
        if _is_jet_coords(coords):
            dim = family.base.dim
            shape = np.shape(ad.value_of_deep(coords[0]))
            if not shape:
                return _transition_point(family, lo, hi, ref_band, kind, coords)
            # jet coordinates over a batch: evaluate pointwise scalar jets
            flat = int(np.prod(shape))
            vals = np.empty(flat, dtype=complex)
            jacs = [np.empty(flat, dtype=complex) for _ in range(dim)]
            for idx in range(flat):
                pt = []
                for c in coords:
                    v = np.broadcast_to(np.asarray(ad.value_of_deep(c)),
                                        shape).ravel()[idx]
                    if isinstance(c, ad.Jet):
                        pj = [np.broadcast_to(
                            np.asarray(ad.value_of_deep(p)), shape).ravel()[idx]
                            for p in c.jac]
                        pt.append(ad.Jet(v, pj))
                    else:
                        pt.append(v)
                out = _transition_point(family, lo, hi, ref_band, kind, tuple(pt))
                if isinstance(out, ad.Jet):
                    vals[idx] = out.val
                    for k in range(dim):
                        jacs[k][idx] = out.jac[k]
                else:
                    vals[idx] = out
                    for k in range(dim):
                        jacs[k][idx] = 0.0
            return ad.Jet(vals.reshape(shape), [j.reshape(shape) for j in jacs])
        pts = list(_coords_point_iter(coords))
        vals = np.array([_transition_point(family, lo, hi, ref_band, kind, pt)
                         for pt in pts])
        shape = np.broadcast_shapes(*[np.shape(c) for c in coords])
        return vals.reshape(shape) if shape else vals[0]
    return cfun


def _transition_point(family, lo, hi, ref_band, kind, pt):
    """c(lo, hi) = s_lo / s_hi at a point (or jet point) of the overlap."""
    if hi.rank == 0:
        return 1.0 + 0.0j  # both lines canonically trivial
    Gp, Gm = _band_frames(family, lo, hi, ref_band, pt)
    Aj = family.A(pt)
    Fp_lo, Fm_lo = lo.frame_plus(pt), lo.frame_minus(pt)
    Fp_hi, Fm_hi = hi.frame_plus(pt), hi.frame_minus(pt)
    up_cols = ([Fp_lo[..., :, c] for c in range(lo.rank)]
               + [Gp[..., :, c] for c in range(hi.rank - lo.rank)])
    Uplus = ad.matmul(ad.conj(ad.transpose(Fp_hi)), ad.stack(up_cols, -1))
    det_up = _det_with_jet(Uplus)
    if kind == "pfaff":
        M = ad.matmul(ad.transpose(Gp), ad.matmul(Aj, Gp))
        pf = _pf_with_jet(M)
        dband = _band_det(family, Gp, pt)
        quarter = ad.exp(0.25 * ad.log(ad.real(dband)))
        return quarter / pf * det_up
    um_cols = ([Fm_lo[..., :, c] for c in range(lo.rank)]
               + [Gm[..., :, c] for c in range(hi.rank - lo.rank)])
    Uminus = ad.matmul(ad.conj(ad.transpose(Fm_hi)), ad.stack(um_cols, -1))
    det_um = _det_with_jet(Uminus)
    delta = _det_with_jet(ad.matmul(ad.conj(ad.transpose(Gm)),
                                    ad.matmul(Aj, Gp)))
    mod = ad.sqrt(ad.real(delta * ad.conj(delta)))
    # the dual det(H+)^{-1} factor inverts the plus-frame determinant
    return (delta / mod) * det_um / det_up


def _band_det(family, Gp, pt):
    """det(Delta+ restricted to the band) = det((A G)^H (A G))."""
    Aj = family.A(pt)
    AG = ad.matmul(Aj, Gp)
    M = ad.matmul(ad.conj(ad.transpose(AG)), AG)
    return _det_with_jet(M)


def pfaff_bundle(family, cuts, convention="eta"):
    """Glued Pfaffian line bundle det(H+_lambda) over the given cut system.

    ``cuts`` is a list of lambda levels or (lambda, region) pairs whose
    regions cover the base; transitions are Pfaffians of the band bilinear
    form in transported frames, normalized to the Quillen metric.
    """
    return _glued_bundle(family, cuts, "pfaff", convention)


def det_bundle(family, cuts, convention="eta"):
    """Glued determinant line bundle det(H+)^{-1} (x) det(H-)."""
    return _glued_bundle(family, cuts, "det", convention)


# -- Quillen norms and connection comparison -----------------------------------

def quillen_report(family, points=None, loop=None, rng=None):
    """Norm fields and connection defects of the canonical sections over the
    invertible locus.

    Reports ||s_can||^2 = det(Delta+) and ||s_can^{1/2}||^2 =
    det(Delta+)^{-1/2}, both directly and reassembled from glued patch data
    at a lambda > 0 cut; the eta-convention defect (zero by construction)
    and the projected-convention defect against -pi i eta^1.
    """
    rng = rng or np.random.default_rng(8)
    if points is None:
        points = family.base.random_points(rng, 12)
    pts = list(_coords_point_iter(points))
    e1 = eta1_family(family.hermitian_pair())

    det_direct = []
    for pt in pts:
        H = ad.value_of_deep(family.delta_plus(pt))
        det_direct.append(np.real(np.linalg.det(H)))
    det_direct = np.array(det_direct)
    if np.min(det_direct) <= 0:
        raise SpectralGapError("family is not invertible on the region")

    # glued-route reconstruction through a lambda > 0 cut
    lam = np.sqrt(2.0 * family.norm_bound())
    cut = spectral_cut(family, lam)
    glued = []
    glued_half = []
    for pt in pts:
        Fp = cut.frame_plus(pt)
        Fm = cut.frame_minus(pt)
        Av = ad.value_of_deep(family.A(pt))
        delta = np.linalg.det(Fm.conj().T @ Av @ Fp) if cut.rank else 1.0
        m = _quillen_m(cut, pt)
        glued.append(np.abs(delta) ** 2 * m)
        Mband = Fp.T @ Av @ Fp
        pf = pfaffian(Mband) if cut.rank else 1.0
        glued_half.append(1.0 / (np.abs(pf) ** 2 * np.sqrt(m)))
    glued = np.array(glued)
    glued_half = np.array(glued_half)  # ||s_can^{1/2}||^2 via glued data

    norm_defect = float(np.max(np.abs(glued / det_direct - 1.0)))
    half_defect = float(np.max(np.abs(
        glued_half * np.sqrt(det_direct) - 1.0)))

    # connection defects on the canonical (empty-frame) patch
    eta_vals = np.array([e1.eval(pt).comps.get(1, 0.0) for pt in pts])
    eta_conv_defect = 0.0  # -pi i eta^1 is the definition on this patch
    projected_defect = float(np.max(np.abs(np.pi * eta_vals)))

    return {
        "s_can_sq": det_direct,
        "s_can_sq_glued": glued,
        "s_half_sq_glued": glued_half,
        "norm_identity_defect": norm_defect,
        "half_norm_identity_defect": half_defect,
        "eta_one_form": e1,
        "eta_convention_defect": eta_conv_defect,
        "projected_convention_defect": projected_defect,
    }


# -- JSON interchange -----------------------------------------------------------

def skew_family_to_json(family, per_axis=None):
    """Sample the family on a uniform base grid (dimension-1 bases)."""
    if family.base.dim != 1:
        raise NotImplementedError("JSON interchange supports 1-dim bases")
    axis = family.base.axes[0]
    n = per_axis or len(axis.nodes)
    grid = np.arange(n) * axis.period / n
    mats = []
    for b in grid:
        Av = np.asarray(ad.value_of_deep(family.A((b,))), dtype=complex)
        mats.append([[[float(z.real), float(z.imag)] for z in row]
                     for row in Av])
    return {"size": family.N, "period": axis.period,
            "grid": [float(b) for b in grid], "matrices": mats}


def skew_family_from_json(doc, resolution=None):
    """Family from a sampled document via trigonometric interpolation.

    The document holds a uniform grid of base points on a circle and the
    stacked matrix entries (row-major, complex numbers as [re, im] pairs).
    """
    if isinstance(doc, (str, bytes)):
        doc = json.loads(doc)
    N = int(doc["size"])
    period = float(doc["period"])
    grid = np.asarray(doc["grid"], dtype=float)
    n = grid.size
    step = period / n
    if np.max(np.abs(grid - np.arange(n) * step)) > 1e-9 * period:
        raise ValueError("grid must be uniform starting at 0")
    raw = np.asarray(doc["matrices"], dtype=float)
    mats = raw[..., 0] + 1j * raw[..., 1]  # (n, N, N)
    coef = np.fft.fft(mats, axis=0) / n
    ks = np.fft.fftfreq(n, d=1.0 / n)  # integer frequencies

    base = make_product([Circle(period)], resolution or n)

    def A(coords):
        b, = coords
        shape = np.shape(ad.value_of_deep(b))
        tot = 0.0
        for m in range(n):
            phase = ad.exp(2j * np.pi * ks[m] / period * b)
            term = ad.reshape(phase, shape + (1, 1)) if shape else phase
            tot = tot + term * coef[m]
        return tot

    return SkewFamily(base, N, A)
