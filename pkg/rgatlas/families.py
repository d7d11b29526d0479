"""Chart atlas of the classified semidirect subgroups Sigma x| H of Sp(2,R).

Every family in the classification (16 reproducing families plus the ten
non-reproducing limit groups, tagged N:*) is exposed through explicit chart
coordinates.  A group element is a pair (u, h): u holds the coordinates of
the symmetric matrix sigma(u) in the family's fixed basis of Sym(2,R), h
holds the chart parameters of the linear factor H.  Composition, inversion,
characters (chi, beta), modular functions and the two actions (dagger on
Sigma, contragredient on Sigma*) are closed-form; the 4x4 symplectic
embedding is kept as an independent oracle for all of them.

Conventions
-----------
chi(h)   = |det(sigma -> h_dagger[sigma])|,  h_dagger[s] = h^-T s h^-1
beta(h)  = |det h|
dg       = chi(h)^-1 dsigma dh,   Delta_G = chi^-1 Delta_H
Phi(x)_i = -<sigma_i x, x>/2     (quadratic symbol in the fixed basis)
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable

import numpy as np

TWO_PI = 2.0 * math.pi

# zeta value excluded from the diagonal H_zeta family (the unimodular member)
ZETA_BAD = math.atan(-1.0 / 3.0)

REPRODUCING_TAGS = (
    "F2_1", "F2_2", "F2_3", "F2_4",
    "F3_1", "F3_2", "F3_3", "F3_4", "F3_5", "F3_6", "F3_7", "F3_8",
    "F4_1", "F4_2", "F4_3", "F4_4",
)
N_LABELS = ("2.1", "2.2", "2.3", "2.5", "3.5", "3.6", "3.7", "3.8", "4.4", "5.1")

# tags taking a parameter, with its kind and printable range
PARAM_KIND = {
    "F2_1": "a", "F2_2": "a", "F2_4": "a",
    "F3_5": "a",  # also accepts the conjugated picture with pkind "z"
    "F3_6": "a", "F3_7": "a",
    "F4_4": "g",
}


class FamilyError(ValueError):
    """Unknown family string or parameter outside the family's range."""


@dataclass(frozen=True)
class FamilyId:
    """Tagged identifier of one classified family plus its real parameter."""

    tag: str
    param: float | None = None
    pkind: str = ""   # "", "a" (alpha), "g" (gamma), "z" (zeta); N tags use label in param slot

    def __str__(self) -> str:
        if self.tag == "N":
            return f"N:{self.pkind}"                  # pkind stores the label, e.g. "2.3"
        if self.param is None:
            return self.tag
        prefix = self.pkind if self.pkind in ("g", "z") else ""
        return f"{self.tag}:{prefix}{self.param:.12g}"

    @staticmethod
    def parse(text: str) -> "FamilyId":
        text = text.strip()
        if ":" not in text:
            return validate(FamilyId(text))
        tag, rest = text.split(":", 1)
        if tag == "N":
            if rest not in N_LABELS:
                raise FamilyError(f"unknown non-reproducing label N:{rest}")
            return FamilyId("N", None, rest)
        pkind = "a"
        if rest[:1] in ("g", "z"):
            pkind, rest = rest[0], rest[1:]
        try:
            param = float(rest)
        except ValueError as exc:
            raise FamilyError(f"bad parameter in family string {text!r}") from exc
        return validate(FamilyId(tag, param, pkind))


def validate(fid: FamilyId) -> FamilyId:
    tag, p, k = fid.tag, fid.param, fid.pkind
    if tag == "N":
        if k not in N_LABELS:
            raise FamilyError(f"unknown non-reproducing label N:{k}")
        return fid
    if tag not in REPRODUCING_TAGS:
        raise FamilyError(f"unknown family tag {tag!r}")
    want = PARAM_KIND.get(tag)
    if want is None:
        if p is not None:
            raise FamilyError(f"{tag} takes no parameter")
        return fid
    if p is None:
        raise FamilyError(f"{tag} needs a parameter")
    if tag == "F3_5" and k == "z":
        if not (-math.pi / 2 <= p < math.pi / 2):
            raise FamilyError("zeta chart requires zeta in [-pi/2, pi/2)")
        if abs(p - ZETA_BAD) < 1e-9:
            raise FamilyError("zeta = arctan(-1/3) is the unimodular member (see N:3.5)")
        return fid
    if k == "z":
        raise FamilyError(f"{tag} has no zeta chart")
    if k != want:
        raise FamilyError(f"{tag} expects parameter kind {want!r}")
    if tag in ("F2_1", "F2_2", "F3_6", "F3_7") and not (0.0 <= p < math.inf):
        raise FamilyError(f"{tag} requires alpha in [0, inf)")
    if tag == "F2_4" and not (-1.0 <= p < 0.0):
        raise FamilyError("F2_4 requires alpha in [-1, 0)")
    if tag == "F3_5" and abs(p - 0.5) < 1e-12:
        raise FamilyError("alpha = 1/2 is the unimodular member (see N:3.5)")
    if tag == "F4_4" and not (p <= 0.5):
        raise FamilyError("F4_4 requires gamma <= 1/2")
    return fid


@dataclass(frozen=True)
class GroupPoint:
    """Chart coordinates (u in R^n for sigma, h-chart parameters) of one element."""

    u: np.ndarray
    h: np.ndarray

    @staticmethod
    def of(u, h) -> "GroupPoint":
        return GroupPoint(np.atleast_1d(np.asarray(u, float)),
                          np.atleast_1d(np.asarray(h, float)))


@dataclass(frozen=True)
class HaarData:
    """Characters and Haar data of one family's H factor (chart functions)."""

    chi: Callable
    beta: Callable
    delta_h: Callable
    haar_density: Callable    # left Haar density w.r.t. chart Lebesgue measure

    def delta_g(self, h):
        return self.delta_h(h) / self.chi(h)


# fixed Sigma bases (Frobenius-orthogonal by inspection)
_I = np.eye(2)
SIGMA = {
    "S1": [np.array([[1.0, 0.0], [0.0, 1.0]])],
    "S2": [np.array([[1.0, 0.0], [0.0, -1.0]])],
    "S3": [np.array([[1.0, 0.0], [0.0, 0.0]])],
    "S1p": [np.array([[1.0, 0.0], [0.0, -1.0]]), np.array([[0.0, 1.0], [1.0, 0.0]])],
    "S2p": [np.array([[1.0, 0.0], [0.0, 1.0]]), np.array([[0.0, 1.0], [1.0, 0.0]])],
    "S3p": [np.array([[0.0, 0.0], [0.0, 1.0]]), np.array([[0.0, 1.0], [1.0, 0.0]])],
    # shear normalization: sigma(u,v) = [0 v/2; v/2 u]
    "Sshear": [np.array([[0.0, 0.0], [0.0, 1.0]]), np.array([[0.0, 0.5], [0.5, 0.0]])],
}


def rot(t):
    c, s = np.cos(t), np.sin(t)
    return np.array([[c, s], [-s, c]])


def hyp(t):
    c, s = np.cosh(t), np.sinh(t)
    return np.array([[c, s], [s, c]])


class Family:
    """Closed-form chart data of one family; see module docstring for conventions."""

    def __init__(self, fid: FamilyId, **kw):
        self.fid = fid
        self.label = kw["label"]              # classification label, e.g. "(2.1)"
        self.sigma_basis = SIGMA[kw["sigma"]]
        self.n = len(self.sigma_basis)
        self.hdim = kw["hdim"]
        self.chart_names = kw["chart_names"]
        self.h_matrix = kw["h_matrix"]        # chart -> 2x2 matrix
        self.h_compose = kw["h_compose"]
        self.h_inverse = kw["h_inverse"]
        self.h_identity = np.array(kw["h_identity"], float)
        self.in_domain = kw.get("in_domain", lambda h: True)
        self.wrap_axes = kw.get("wrap_axes", ())
        self.haar = HaarData(kw["chi"], kw["beta"], kw["delta_h"], kw["haar_density"])
        self.contragredient = kw["contragredient"]   # (h, y[2 or 1,...]) -> same shape
        self.phi = kw["phi"]                  # (X1, X2) -> stacked (n, ...) array
        self.jphi = kw["jphi"]
        self.in_X = kw["in_X"]
        self.in_Y = kw["in_Y"]
        self.reproducing = kw["reproducing"]
        self.unimodular = kw["unimodular"]
        self.stabilizer = kw.get("stabilizer")
        self.random_h = kw["random_h"]        # rng -> chart array, for property tests

    # -- chart-level group operations -------------------------------------
    def _wrap(self, h):
        if not self.wrap_axes:
            return h
        h = np.array(h, float)
        for i in self.wrap_axes:
            h[i] = np.mod(h[i], TWO_PI)
        return h

    def compose(self, g1: GroupPoint, g2: GroupPoint) -> GroupPoint:
        self.check_domain(g1.h)
        self.check_domain(g2.h)
        h = self._wrap(self.h_compose(g1.h, g2.h))
        u = g1.u + self.m_matrix(g1.h) @ g2.u
        return GroupPoint(u, h)

    def inverse(self, g: GroupPoint) -> GroupPoint:
        self.check_domain(g.h)
        hinv = self._wrap(self.h_inverse(g.h))
        u = -(self.m_matrix(hinv) @ g.u)
        return GroupPoint(u, hinv)

    def identity(self) -> GroupPoint:
        return GroupPoint(np.zeros(self.n), np.array(self.h_identity))

    def check_domain(self, h) -> None:
        if not self.in_domain(np.asarray(h, float)):
            raise FamilyError(f"{self.fid}: chart point {h} outside the chart domain")

    # -- actions -----------------------------------------------------------
    def m_matrix(self, h) -> np.ndarray:
        """Matrix of the dagger action on Sigma coordinates: h_dagger[s(u)] = s(M u)."""
        hm = self.h_matrix(h)
        hinv = np.linalg.inv(hm)
        cols = []
        for sj in self.sigma_basis:
            t = hinv.T @ sj @ hinv
            cols.append([np.sum(t * si) / np.sum(si * si) for si in self.sigma_basis])
        return np.array(cols).T

    def dagger_action(self, h, u) -> np.ndarray:
        self.check_domain(h)
        return self.m_matrix(h) @ np.atleast_1d(np.asarray(u, float))

    def contragredient_action(self, h, y) -> np.ndarray:
        """Action on Sigma^* coordinates: h[y] = M_h^-T y (vectorized over y)."""
        self.check_domain(h)
        return self.contragredient(np.asarray(h, float), np.asarray(y, float))

    def sigma_of(self, u) -> np.ndarray:
        u = np.atleast_1d(np.asarray(u, float))
        return sum(ui * si for ui, si in zip(u, self.sigma_basis))

    def embed(self, g: GroupPoint) -> np.ndarray:
        """4x4 symplectic matrix [[h, 0], [sigma(u) h, h^-T]] - the oracle picture."""
        hm = self.h_matrix(g.h)
        out = np.zeros((4, 4))
        out[:2, :2] = hm
        out[2:, :2] = self.sigma_of(g.u) @ hm
        out[2:, 2:] = np.linalg.inv(hm).T
        return out

    def sample_point(self, rng) -> GroupPoint:
        u = rng.uniform(-2.0, 2.0, size=self.n)
        return GroupPoint(u, np.atleast_1d(self.random_h(rng)))


# ---------------------------------------------------------------------------
# family builders
# ---------------------------------------------------------------------------

def _one_param(fid, label, sigma, h_matrix, chi, beta, contra, phi, jphi, in_X, in_Y,
               reproducing=True, unimodular=False, delta_h=None, haar=None,
               wrap=False, stabilizer=None, h_range=1.0):
    return Family(
        fid,
        label=label, sigma=sigma, hdim=1, chart_names=("t",),
        h_matrix=lambda h: h_matrix(h[0]),
        h_compose=lambda a, b: np.array([a[0] + b[0]]),
        h_inverse=lambda a: np.array([-a[0]]),
        h_identity=[0.0],
        chi=lambda h: chi(np.asarray(h)[..., 0] if np.ndim(h) > 1 else np.asarray(h)[0]),
        beta=lambda h: beta(np.asarray(h)[..., 0] if np.ndim(h) > 1 else np.asarray(h)[0]),
        delta_h=(delta_h or (lambda h: np.ones(np.shape(np.asarray(h)[..., 0] if np.ndim(h) > 1 else 1.0)).squeeze() * 1.0)),
        haar_density=(haar or (lambda h: 1.0)),
        contragredient=lambda h, y: contra(h[0], y),
        phi=phi, jphi=jphi, in_X=in_X, in_Y=in_Y,
        reproducing=reproducing, unimodular=unimodular,
        wrap_axes=(0,) if wrap else (),
        stabilizer=stabilizer,
        random_h=lambda rng: np.array([rng.uniform(-h_range, h_range)]),
    )


def _phi_s1(x1, x2):
    return np.stack([-(x1 * x1 + x2 * x2) / 2.0])


def _phi_s2(x1, x2):
    return np.stack([(x2 * x2 - x1 * x1) / 2.0])


def _phi_s3(x1, x2):
    return np.stack([-x1 * x1 / 2.0])


def _phi_s1p(x1, x2):
    return np.stack([(x2 * x2 - x1 * x1) / 2.0, -x1 * x2])


def _phi_s2p(x1, x2):
    return np.stack([-(x1 * x1 + x2 * x2) / 2.0, -x1 * x2])


def _phi_s3p(x1, x2):
    return np.stack([-x2 * x2 / 2.0, -x1 * x2])


def _phi_shear(x1, x2):
    return np.stack([-x2 * x2 / 2.0, -x1 * x2 / 2.0])


def _norm(x1, x2):
    return np.hypot(x1, x2)


def _build_family(fid: FamilyId) -> Family:
    tag, p = fid.tag, fid.param

    if tag == "F2_1":
        a = p
        return _one_param(
            fid, "(2.1)", "S1",
            h_matrix=lambda t: math.exp(t) * rot(a * t),
            chi=lambda t: np.exp(-2.0 * t), beta=lambda t: np.exp(2.0 * t),
            contra=lambda t, y: np.exp(2.0 * t) * y,
            phi=_phi_s1, jphi=_norm,
            in_X=lambda x1, x2: _norm(x1, x2) > 0,
            in_Y=lambda y: np.asarray(y)[0] < 0)

    if tag == "F2_2":
        a = p
        return _one_param(
            fid, "(2.2)", "S2",
            h_matrix=lambda t: math.exp(t) * hyp(a * t),
            chi=lambda t: np.exp(-2.0 * t), beta=lambda t: np.exp(2.0 * t),
            contra=lambda t, y: np.exp(2.0 * t) * y,
            phi=_phi_s2, jphi=_norm,
            in_X=lambda x1, x2: np.abs(np.abs(x1) - np.abs(x2)) > 0,
            in_Y=lambda y: np.asarray(y)[0] != 0)

    if tag == "F2_3":
        # the reproducing "(2.4)" group e^t [1 0; t 1]
        return _one_param(
            fid, "(2.4)", "S3",
            h_matrix=lambda t: math.exp(t) * np.array([[1.0, 0.0], [t, 1.0]]),
            chi=lambda t: np.exp(-2.0 * t), beta=lambda t: np.exp(2.0 * t),
            contra=lambda t, y: np.exp(2.0 * t) * y,
            phi=_phi_s3, jphi=lambda x1, x2: np.abs(x1),
            in_X=lambda x1, x2: np.abs(x1) > 0,
            in_Y=lambda y: np.asarray(y)[0] < 0)

    if tag == "F2_4":
        a = p
        return _one_param(
            fid, "(2.5)", "S3",
            h_matrix=lambda t: np.diag([math.exp(a * t), math.exp((a + 1.0) * t)]),
            chi=lambda t: np.exp(-2.0 * a * t), beta=lambda t: np.exp((2.0 * a + 1.0) * t),
            contra=lambda t, y: np.exp(2.0 * a * t) * y,
            phi=_phi_s3, jphi=lambda x1, x2: np.abs(x1),
            in_X=lambda x1, x2: np.abs(x1) > 0,
            in_Y=lambda y: np.asarray(y)[0] < 0)

    if tag == "F3_1":
        return Family(
            fid, label="(3.1)", sigma="S1", hdim=2, chart_names=("t", "theta"),
            h_matrix=lambda h: math.exp(h[0]) * rot(h[1]),
            h_compose=lambda a, b: np.array([a[0] + b[0], a[1] + b[1]]),
            h_inverse=lambda a: np.array([-a[0], -a[1]]),
            h_identity=[0.0, 0.0], wrap_axes=(1,),
            chi=lambda h: np.exp(-2.0 * np.asarray(h)[..., 0]),
            beta=lambda h: np.exp(2.0 * np.asarray(h)[..., 0]),
            delta_h=lambda h: 1.0, haar_density=lambda h: 1.0,
            contragredient=lambda h, y: np.exp(2.0 * h[0]) * y,
            phi=_phi_s1, jphi=_norm,
            in_X=lambda x1, x2: _norm(x1, x2) > 0,
            in_Y=lambda y: np.asarray(y)[0] < 0,
            reproducing=True, unimodular=False, stabilizer="circle",
            random_h=lambda rng: np.array([rng.uniform(-1, 1), rng.uniform(0, TWO_PI)]))

    if tag == "F3_2":
        return Family(
            fid, label="(3.2)", sigma="S2", hdim=2, chart_names=("t", "s"),
            h_matrix=lambda h: math.exp(h[0]) * hyp(h[1]),
            h_compose=lambda a, b: np.array([a[0] + b[0], a[1] + b[1]]),
            h_inverse=lambda a: np.array([-a[0], -a[1]]),
            h_identity=[0.0, 0.0],
            chi=lambda h: np.exp(-2.0 * np.asarray(h)[..., 0]),
            beta=lambda h: np.exp(2.0 * np.asarray(h)[..., 0]),
            delta_h=lambda h: 1.0, haar_density=lambda h: 1.0,
            contragredient=lambda h, y: np.exp(2.0 * h[0]) * y,
            phi=_phi_s2, jphi=_norm,
            in_X=lambda x1, x2: np.abs(np.abs(x1) - np.abs(x2)) > 0,
            in_Y=lambda y: np.asarray(y)[0] != 0,
            reproducing=True, unimodular=False, stabilizer="line",
            random_h=lambda rng: rng.uniform(-1, 1, size=2))

    if tag == "F3_3":
        return Family(
            fid, label="(3.3)", sigma="S3", hdim=2, chart_names=("a", "c"),
            h_matrix=lambda h: np.diag([h[0] ** -0.5, h[1]]),
            h_compose=lambda a, b: np.array([a[0] * b[0], a[1] * b[1]]),
            h_inverse=lambda a: np.array([1.0 / a[0], 1.0 / a[1]]),
            h_identity=[1.0, 1.0],
            in_domain=lambda h: bool(np.all(h > 0)),
            chi=lambda h: np.asarray(h)[..., 0],
            beta=lambda h: np.asarray(h)[..., 0] ** -0.5 * np.asarray(h)[..., 1],
            delta_h=lambda h: 1.0,
            haar_density=lambda h: 1.0 / (np.asarray(h)[..., 0] * np.asarray(h)[..., 1]),
            contragredient=lambda h, y: y / h[0],
            phi=_phi_s3, jphi=lambda x1, x2: np.abs(x1),
            in_X=lambda x1, x2: np.abs(x1) > 0,
            in_Y=lambda y: np.asarray(y)[0] < 0,
            reproducing=True, unimodular=False, stabilizer="dilation-line",
            random_h=lambda rng: np.exp(rng.uniform(-1, 1, size=2)))

    if tag == "F3_4":
        return Family(
            fid, label="(3.4)", sigma="S3", hdim=2, chart_names=("t", "s"),
            h_matrix=lambda h: np.array([[math.exp(h[0]), 0.0], [h[1], math.exp(h[0])]]),
            h_compose=lambda a, b: np.array([a[0] + b[0],
                                             a[1] * math.exp(b[0]) + b[1] * math.exp(a[0])]),
            h_inverse=lambda a: np.array([-a[0], -a[1] * math.exp(-2.0 * a[0])]),
            h_identity=[0.0, 0.0],
            chi=lambda h: np.exp(-2.0 * np.asarray(h)[..., 0]),
            beta=lambda h: np.exp(2.0 * np.asarray(h)[..., 0]),
            delta_h=lambda h: 1.0,
            haar_density=lambda h: np.exp(-np.asarray(h)[..., 0]),
            contragredient=lambda h, y: np.exp(2.0 * h[0]) * y,
            phi=_phi_s3, jphi=lambda x1, x2: np.abs(x1),
            in_X=lambda x1, x2: np.abs(x1) > 0,
            in_Y=lambda y: np.asarray(y)[0] < 0,
            reproducing=True, unimodular=False, stabilizer="trivial",
            random_h=lambda rng: rng.uniform(-1, 1, size=2))

    if tag == "F3_5" and fid.pkind != "z":
        a = p
        return Family(
            fid, label="(3.5)", sigma="S3", hdim=2, chart_names=("t", "s"),
            h_matrix=lambda h: np.array([[math.exp(a * h[0]), 0.0],
                                         [h[1], math.exp((a + 1.0) * h[0])]]),
            h_compose=lambda g1, g2: np.array([
                g1[0] + g2[0],
                g1[1] * math.exp(a * g2[0]) + g2[1] * math.exp((a + 1.0) * g1[0])]),
            h_inverse=lambda g: np.array([-g[0], -g[1] * math.exp(-(2.0 * a + 1.0) * g[0])]),
            h_identity=[0.0, 0.0],
            chi=lambda h: np.exp(-2.0 * a * np.asarray(h)[..., 0]),
            beta=lambda h: np.exp((2.0 * a + 1.0) * np.asarray(h)[..., 0]),
            delta_h=lambda h: np.exp(-np.asarray(h)[..., 0]),
            haar_density=lambda h: np.exp(-(a + 1.0) * np.asarray(h)[..., 0]),
            contragredient=lambda h, y: np.exp(2.0 * a * h[0]) * y,
            phi=_phi_s3, jphi=lambda x1, x2: np.abs(x1),
            in_X=lambda x1, x2: np.abs(x1) > 0,
            in_Y=lambda y: np.asarray(y)[0] < 0,
            reproducing=True, unimodular=False, stabilizer="trivial",
            random_h=lambda rng: rng.uniform(-1, 1, size=2))

    if tag == "F3_5" and fid.pkind == "z":
        z = p
        c, s = math.cos(z), math.sin(z)
        return _one_param(
            fid, "(3.4)/(3.5) conjugated", "S3p",
            h_matrix=lambda t: np.diag([math.exp(t * c), math.exp(t * s)]),
            chi=lambda t: np.exp(-t * (3.0 * s + c)),
            beta=lambda t: np.exp(t * (c + s)),
            contra=lambda t, y: _scale2(np.exp(2.0 * t * s), np.exp(t * (s + c)), y),
            phi=_phi_s3p, jphi=lambda x1, x2: x2 * x2,
            in_X=lambda x1, x2: np.abs(x1 * x2) > 0,
            in_Y=lambda y: (np.asarray(y)[0] < 0) & (np.asarray(y)[1] != 0),
            stabilizer="trivial")

    if tag == "F3_6":
        a = p
        return _one_param(
            fid, "(3.6)", "S1p",
            h_matrix=lambda t: math.exp(t) * rot(a * t),
            chi=lambda t: np.exp(-4.0 * t), beta=lambda t: np.exp(2.0 * t),
            contra=lambda t, y: np.exp(2.0 * t) * _rot_apply(2.0 * a * t, y),
            phi=_phi_s1p, jphi=lambda x1, x2: x1 * x1 + x2 * x2,
            in_X=lambda x1, x2: _norm(x1, x2) > 0,
            in_Y=lambda y: _norm(np.asarray(y)[0], np.asarray(y)[1]) > 0,
            stabilizer="trivial")

    if tag == "F3_7":
        a = p
        return _one_param(
            fid, "(3.7)", "S2p",
            h_matrix=lambda t: math.exp(t) * hyp(a * t),
            chi=lambda t: np.exp(-4.0 * t), beta=lambda t: np.exp(2.0 * t),
            contra=lambda t, y: np.exp(2.0 * t) * _hyp_apply(2.0 * a * t, y),
            phi=_phi_s2p, jphi=lambda x1, x2: np.abs(x1 * x1 - x2 * x2),
            in_X=lambda x1, x2: np.abs(np.abs(x1) - np.abs(x2)) > 0,
            in_Y=lambda y: (np.asarray(y)[0] < 0) & (np.abs(np.asarray(y)[1]) < np.abs(np.asarray(y)[0])),
            stabilizer="trivial")

    if tag == "F3_8":
        # the reproducing "(3.9)" group e^t [1 t; 0 1]
        return _one_param(
            fid, "(3.9)", "S3p",
            h_matrix=lambda t: math.exp(t) * np.array([[1.0, t], [0.0, 1.0]]),
            chi=lambda t: np.exp(-4.0 * t), beta=lambda t: np.exp(2.0 * t),
            contra=lambda t, y: np.exp(2.0 * t) * _lshear_apply(2.0 * t, y),
            phi=_phi_s3p, jphi=lambda x1, x2: x2 * x2,
            in_X=lambda x1, x2: np.abs(x2) > 0,
            in_Y=lambda y: np.asarray(y)[0] < 0,
            stabilizer="trivial")

    if tag == "F4_1":
        return Family(
            fid, label="(4.1)", sigma="S3", hdim=3, chart_names=("a", "b", "c"),
            h_matrix=lambda h: np.array([[h[0], 0.0], [h[1], h[2]]]),
            h_compose=lambda g1, g2: np.array([g1[0] * g2[0],
                                               g1[1] * g2[0] + g1[2] * g2[1],
                                               g1[2] * g2[2]]),
            h_inverse=lambda g: np.array([1.0 / g[0], -g[1] / (g[0] * g[2]), 1.0 / g[2]]),
            h_identity=[1.0, 0.0, 1.0],
            in_domain=lambda h: bool(h[0] > 0 and h[2] > 0),
            chi=lambda h: np.asarray(h)[..., 0] ** -2.0,
            beta=lambda h: np.asarray(h)[..., 0] * np.asarray(h)[..., 2],
            delta_h=lambda h: np.asarray(h)[..., 0] / np.asarray(h)[..., 2],
            haar_density=lambda h: 1.0 / (np.asarray(h)[..., 0] * np.asarray(h)[..., 2] ** 2),
            contragredient=lambda h, y: h[0] ** 2 * y,
            phi=_phi_s3, jphi=lambda x1, x2: np.abs(x1),
            in_X=lambda x1, x2: np.abs(x1) > 0,
            in_Y=lambda y: np.asarray(y)[0] < 0,
            reproducing=True, unimodular=False, stabilizer="affine",
            random_h=lambda rng: np.array([math.exp(rng.uniform(-1, 1)),
                                           rng.uniform(-1, 1),
                                           math.exp(rng.uniform(-1, 1))]))

    if tag == "F4_2":
        return Family(
            fid, label="(4.2)", sigma="S1p", hdim=2, chart_names=("t", "theta"),
            h_matrix=lambda h: math.exp(h[0]) * rot(h[1]),
            h_compose=lambda a, b: np.array([a[0] + b[0], a[1] + b[1]]),
            h_inverse=lambda a: np.array([-a[0], -a[1]]),
            h_identity=[0.0, 0.0], wrap_axes=(1,),
            chi=lambda h: np.exp(-4.0 * np.asarray(h)[..., 0]),
            beta=lambda h: np.exp(2.0 * np.asarray(h)[..., 0]),
            delta_h=lambda h: 1.0,
            haar_density=lambda h: 1.0 / TWO_PI,
            contragredient=lambda h, y: np.exp(2.0 * h[0]) * _rot_apply(2.0 * h[1], y),
            phi=_phi_s1p, jphi=lambda x1, x2: x1 * x1 + x2 * x2,
            in_X=lambda x1, x2: _norm(x1, x2) > 0,
            in_Y=lambda y: _norm(np.asarray(y)[0], np.asarray(y)[1]) > 0,
            reproducing=True, unimodular=False, stabilizer="order-2",
            random_h=lambda rng: np.array([rng.uniform(-1, 1), rng.uniform(0, TWO_PI)]))

    if tag == "F4_3":
        return Family(
            fid, label="(4.3)", sigma="S2p", hdim=2, chart_names=("t", "s"),
            h_matrix=lambda h: math.exp(h[0]) * hyp(h[1]),
            h_compose=lambda a, b: np.array([a[0] + b[0], a[1] + b[1]]),
            h_inverse=lambda a: np.array([-a[0], -a[1]]),
            h_identity=[0.0, 0.0],
            chi=lambda h: np.exp(-4.0 * np.asarray(h)[..., 0]),
            beta=lambda h: np.exp(2.0 * np.asarray(h)[..., 0]),
            delta_h=lambda h: 1.0, haar_density=lambda h: 1.0,
            contragredient=lambda h, y: np.exp(2.0 * h[0]) * _hyp_apply(2.0 * h[1], y),
            phi=_phi_s2p, jphi=lambda x1, x2: np.abs(x1 * x1 - x2 * x2),
            in_X=lambda x1, x2: np.abs(np.abs(x1) - np.abs(x2)) > 0,
            in_Y=lambda y: (np.asarray(y)[0] < 0) & (np.abs(np.asarray(y)[1]) < np.abs(np.asarray(y)[0])),
            reproducing=True, unimodular=False, stabilizer="trivial",
            random_h=lambda rng: rng.uniform(-1, 1, size=2))

    if tag == "F4_4":
        g = p
        return Family(
            fid, label="(4.4)", sigma="Sshear", hdim=2, chart_names=("a", "s"),
            h_matrix=lambda h: np.array([[h[0] ** (0.5 - g), -h[1] * h[0] ** -0.5],
                                         [0.0, h[0] ** -0.5]]),
            h_compose=lambda g1, g2: np.array([g1[0] * g2[0],
                                               g1[1] + g1[0] ** (1.0 - g) * g2[1]]),
            h_inverse=lambda g1: np.array([1.0 / g1[0], -g1[1] * g1[0] ** (g - 1.0)]),
            h_identity=[1.0, 0.0],
            in_domain=lambda h: bool(h[0] > 0),
            chi=lambda h: np.asarray(h)[..., 0] ** (g + 1.0),
            beta=lambda h: np.asarray(h)[..., 0] ** (-g),
            delta_h=lambda h: np.asarray(h)[..., 0] ** (g - 1.0),
            haar_density=lambda h: np.asarray(h)[..., 0] ** (g - 2.0),
            contragredient=lambda h, y: _shear_contra(h, y, g),
            phi=_phi_shear, jphi=lambda x1, x2: x2 * x2 / 2.0,
            in_X=lambda x1, x2: np.abs(x2) > 0,
            in_Y=lambda y: np.asarray(y)[0] < 0,
            reproducing=True, unimodular=False, stabilizer="trivial",
            random_h=lambda rng: np.array([math.exp(rng.uniform(-1, 1)), rng.uniform(-1, 1)]))

    # --- non-reproducing tags ---------------------------------------------
    if tag == "N":
        return _build_n_family(fid)

    raise FamilyError(f"unknown family tag {tag!r}")


def _scale2(k1, k2, y):
    out = np.array(y, float, copy=True)
    out[0] *= k1
    out[1] *= k2
    return out


def _rot_apply(t, y):
    c, s = math.cos(t), math.sin(t)
    return np.stack([c * y[0] + s * y[1], -s * y[0] + c * y[1]])


def _hyp_apply(t, y):
    c, s = math.cosh(t), math.sinh(t)
    return np.stack([c * y[0] + s * y[1], s * y[0] + c * y[1]])


def _lshear_apply(t, y):
    return np.stack([y[0], t * y[0] + y[1]])


def _shear_contra(h, y, g):
    a, s = h[0], h[1]
    return np.stack([y[0] / a, (y[1] - y[0] * s * a ** (g - 1.0)) * a ** (-g)])


def _build_n_family(fid: FamilyId) -> Family:
    lab = fid.pkind

    if lab == "2.1":
        return _one_param(fid, "(2.1) alpha=inf", "S1",
                          h_matrix=rot,
                          chi=lambda t: np.ones(np.shape(t)) * 1.0,
                          beta=lambda t: np.ones(np.shape(t)) * 1.0,
                          contra=lambda t, y: y * 1.0,
                          phi=_phi_s1, jphi=_norm,
                          in_X=lambda x1, x2: _norm(x1, x2) > 0,
                          in_Y=lambda y: np.asarray(y)[0] < 0,
                          reproducing=False, unimodular=True, wrap=True)
    if lab == "2.2":
        return _one_param(fid, "(2.2) alpha=inf", "S2",
                          h_matrix=hyp,
                          chi=lambda t: np.ones(np.shape(t)) * 1.0,
                          beta=lambda t: np.ones(np.shape(t)) * 1.0,
                          contra=lambda t, y: y * 1.0,
                          phi=_phi_s2, jphi=_norm,
                          in_X=lambda x1, x2: np.abs(np.abs(x1) - np.abs(x2)) > 0,
                          in_Y=lambda y: np.asarray(y)[0] != 0,
                          reproducing=False, unimodular=True)
    if lab == "2.3":
        return _one_param(fid, "(2.3)", "S3",
                          h_matrix=lambda t: np.array([[1.0, 0.0], [t, 1.0]]),
                          chi=lambda t: np.ones(np.shape(t)) * 1.0,
                          beta=lambda t: np.ones(np.shape(t)) * 1.0,
                          contra=lambda t, y: y * 1.0,
                          phi=_phi_s3, jphi=lambda x1, x2: np.abs(x1),
                          in_X=lambda x1, x2: np.abs(x1) > 0,
                          in_Y=lambda y: np.asarray(y)[0] < 0,
                          reproducing=False, unimodular=True)
    if lab == "2.5":
        return _one_param(fid, "(2.5) alpha=0", "S3",
                          h_matrix=lambda t: np.diag([1.0, math.exp(t)]),
                          chi=lambda t: np.ones(np.shape(t)) * 1.0,
                          beta=lambda t: np.exp(t),
                          contra=lambda t, y: y * 1.0,
                          phi=_phi_s3, jphi=lambda x1, x2: np.abs(x1),
                          in_X=lambda x1, x2: np.abs(x1) > 0,
                          in_Y=lambda y: np.asarray(y)[0] < 0,
                          reproducing=False, unimodular=True)
    if lab == "3.5":
        return Family(
            fid, label="(3.5) alpha=1/2", sigma="S3", hdim=2, chart_names=("t", "s"),
            h_matrix=lambda h: np.array([[math.exp(h[0]), 0.0], [h[1], math.exp(3.0 * h[0])]]),
            h_compose=lambda g1, g2: np.array([g1[0] + g2[0],
                                               g1[1] * math.exp(g2[0]) + g2[1] * math.exp(3.0 * g1[0])]),
            h_inverse=lambda g: np.array([-g[0], -g[1] * math.exp(-4.0 * g[0])]),
            h_identity=[0.0, 0.0],
            chi=lambda h: np.exp(-2.0 * np.asarray(h)[..., 0]),
            beta=lambda h: np.exp(4.0 * np.asarray(h)[..., 0]),
            delta_h=lambda h: np.exp(-2.0 * np.asarray(h)[..., 0]),
            haar_density=lambda h: np.exp(-3.0 * np.asarray(h)[..., 0]),
            contragredient=lambda h, y: np.exp(2.0 * h[0]) * y,
            phi=_phi_s3, jphi=lambda x1, x2: np.abs(x1),
            in_X=lambda x1, x2: np.abs(x1) > 0,
            in_Y=lambda y: np.asarray(y)[0] < 0,
            reproducing=False, unimodular=True,
            random_h=lambda rng: rng.uniform(-1, 1, size=2))
    if lab == "3.6":
        return _one_param(fid, "(3.6) alpha=inf", "S1p",
                          h_matrix=rot,
                          chi=lambda t: np.ones(np.shape(t)) * 1.0,
                          beta=lambda t: np.ones(np.shape(t)) * 1.0,
                          contra=lambda t, y: _rot_apply(2.0 * t, y),
                          phi=_phi_s1p, jphi=lambda x1, x2: x1 * x1 + x2 * x2,
                          in_X=lambda x1, x2: _norm(x1, x2) > 0,
                          in_Y=lambda y: True,
                          reproducing=False, unimodular=True, wrap=True)
    if lab == "3.7":
        return _one_param(fid, "(3.7) alpha=inf", "S2p",
                          h_matrix=hyp,
                          chi=lambda t: np.ones(np.shape(t)) * 1.0,
                          beta=lambda t: np.ones(np.shape(t)) * 1.0,
                          contra=lambda t, y: _hyp_apply(2.0 * t, y),
                          phi=_phi_s2p, jphi=lambda x1, x2: np.abs(x1 * x1 - x2 * x2),
                          in_X=lambda x1, x2: np.abs(np.abs(x1) - np.abs(x2)) > 0,
                          in_Y=lambda y: True,
                          reproducing=False, unimodular=True)
    if lab == "3.8":
        return _one_param(fid, "(3.8)", "S3p",
                          h_matrix=lambda t: np.array([[1.0, t], [0.0, 1.0]]),
                          chi=lambda t: np.ones(np.shape(t)) * 1.0,
                          beta=lambda t: np.ones(np.shape(t)) * 1.0,
                          contra=lambda t, y: _lshear_apply(2.0 * t, y),
                          phi=_phi_s3p, jphi=lambda x1, x2: x2 * x2,
                          in_X=lambda x1, x2: np.abs(x2) > 0,
                          in_Y=lambda y: np.asarray(y)[0] < 0,
                          reproducing=False, unimodular=True)
    if lab == "4.4":
        return Family(
            fid, label="(4.4) alpha=-1", sigma="S3p", hdim=2, chart_names=("t", "s"),
            h_matrix=lambda h: np.array([[h[0], h[1]], [0.0, 1.0]]),
            h_compose=lambda g1, g2: np.array([g1[0] * g2[0], g1[0] * g2[1] + g1[1]]),
            h_inverse=lambda g: np.array([1.0 / g[0], -g[1] / g[0]]),
            h_identity=[1.0, 0.0],
            in_domain=lambda h: bool(h[0] > 0),
            chi=lambda h: 1.0 / np.asarray(h)[..., 0],
            beta=lambda h: np.asarray(h)[..., 0],
            delta_h=lambda h: 1.0 / np.asarray(h)[..., 0],
            haar_density=lambda h: np.asarray(h)[..., 0] ** -2.0,
            contragredient=lambda h, y: np.stack([y[0] / h[0],
                                                  y[1] - 2.0 * (h[1] / h[0]) * y[0]]),
            phi=_phi_s3p, jphi=lambda x1, x2: x2 * x2,
            in_X=lambda x1, x2: np.abs(x2) > 0,
            in_Y=lambda y: np.asarray(y)[0] < 0,
            reproducing=False, unimodular=True,
            random_h=lambda rng: np.array([math.exp(rng.uniform(-1, 1)), rng.uniform(-1, 1)]))
    if lab == "5.1":
        return Family(
            fid, label="(5.1)", sigma="S3p", hdim=3, chart_names=("a", "b", "c"),
            h_matrix=lambda h: np.array([[h[2], h[1]], [0.0, h[0]]]),
            h_compose=lambda g1, g2: np.array([g1[0] * g2[0],
                                               g1[2] * g2[1] + g1[1] * g2[0],
                                               g1[2] * g2[2]]),
            h_inverse=lambda g: np.array([1.0 / g[0], -g[1] / (g[0] * g[2]), 1.0 / g[2]]),
            h_identity=[1.0, 0.0, 1.0],
            in_domain=lambda h: bool(h[0] > 0 and h[2] > 0),
            chi=lambda h: np.asarray(h)[..., 0] ** -3.0 * np.asarray(h)[..., 2] ** -1.0,
            beta=lambda h: np.asarray(h)[..., 0] * np.asarray(h)[..., 2],
            delta_h=lambda h: np.asarray(h)[..., 0] / np.asarray(h)[..., 2],
            haar_density=lambda h: 1.0 / (np.asarray(h)[..., 0] * np.asarray(h)[..., 2] ** 2),
            contragredient=None,  # replaced below
            phi=_phi_s3p, jphi=lambda x1, x2: x2 * x2,
            in_X=lambda x1, x2: np.abs(x2) > 0,
            in_Y=lambda y: True,
            reproducing=False, unimodular=False,
            random_h=lambda rng: np.array([math.exp(rng.uniform(-1, 1)),
                                           rng.uniform(-1, 1),
                                           math.exp(rng.uniform(-1, 1))]))
    raise FamilyError(f"unknown non-reproducing label N:{lab}")


@lru_cache(maxsize=256)
def _family_cached(key: str) -> Family:
    fid = FamilyId.parse(key)
    fam = _build_family(fid)
    if fam.contragredient is None:
        # generic fallback through the dagger matrix (used by N:5.1)
        def contra(h, y, fam=fam):
            m = fam.m_matrix(h)
            return np.einsum("ij,j...->i...", np.linalg.inv(m).T, np.atleast_1d(y))
        fam.contragredient = contra
    return fam


def family(fid) -> Family:
    """Return the Family object for a FamilyId or its string form."""
    if isinstance(fid, Family):
        return fid
    if isinstance(fid, FamilyId):
        fid = str(validate(fid))
    return _family_cached(str(FamilyId.parse(str(fid))))


# ---------------------------------------------------------------------------
# flat spec-level operations
# ---------------------------------------------------------------------------

def compose(fid, g1: GroupPoint, g2: GroupPoint) -> GroupPoint:
    return family(fid).compose(g1, g2)


def inverse(fid, g: GroupPoint) -> GroupPoint:
    return family(fid).inverse(g)


def characters(fid, h):
    """(chi, beta, Delta_H, Delta_G) at the chart point h."""
    fam = family(fid)
    fam.check_domain(h)
    h = np.asarray(h, float)
    chi = float(fam.haar.chi(h))
    beta = float(fam.haar.beta(h))
    dh = float(fam.haar.delta_h(h))
    return chi, beta, dh, dh / chi


def dagger_action(fid, h, u):
    return family(fid).dagger_action(h, u)


def contragredient_action(fid, h, y):
    return family(fid).contragredient_action(h, y)


def is_unimodular(fid, samples: int = 100, seed: int = 0) -> bool:
    """Analytic unimodularity verdict, cross-checked by sampling Delta_G."""
    fam = family(fid)
    rng = np.random.default_rng(seed)
    for _ in range(samples):
        h = np.atleast_1d(fam.random_h(rng))
        dg = float(fam.haar.delta_h(h)) / float(fam.haar.chi(h))
        if fam.unimodular and abs(dg - 1.0) > 1e-10:
            raise AssertionError(f"{fam.fid}: Delta_G != 1 at {h} but family marked unimodular")
        if not fam.unimodular and abs(dg - 1.0) > 1e-10:
            return False
    if not fam.unimodular:
        # non-unimodular family whose sampled points all hit Delta_G = 1 would be a bug
        raise AssertionError(f"{fam.fid}: marked non-unimodular but Delta_G sampled as 1")
    return True


def all_family_ids(params=None) -> list[FamilyId]:
    """One representative FamilyId per classified family (reproducing + N tags).

    params may override the default representative parameter per tag.
    """
    defaults = {"F2_1": 0.0, "F2_2": 0.0, "F2_4": -1.0, "F3_5": 0.25,
                "F3_6": 0.0, "F3_7": 0.0, "F4_4": 0.5}
    if params:
        defaults.update(params)
    out = []
    for tag in REPRODUCING_TAGS:
        kind = PARAM_KIND.get(tag, "")
        p = defaults.get(tag)
        out.append(validate(FamilyId(tag, p, kind if p is not None else "")))
    out.extend(FamilyId("N", None, lab) for lab in N_LABELS)
    return out


def classification_rows() -> list[dict]:
    """Rows of the atlas table: family, parameter range, status, stabilizer."""
    ranges = {
        "F2_1": "alpha in [0,inf)", "F2_2": "alpha in [0,inf)", "F2_3": "-",
        "F2_4": "alpha in [-1,0)", "F3_1": "-", "F3_2": "-", "F3_3": "-",
        "F3_4": "-", "F3_5": "alpha != 1/2 (zeta chart: z prefix)",
        "F3_6": "alpha in [0,inf)", "F3_7": "alpha in [0,inf)", "F3_8": "-",
        "F4_1": "-", "F4_2": "-", "F4_3": "-", "F4_4": "gamma <= 1/2",
    }
    rows = []
    for fid in all_family_ids():
        fam = family(fid)
        rows.append({
            "family": fid.tag if fid.tag != "N" else str(fid),
            "label": fam.label,
            "parameters": ranges.get(fid.tag, "-"),
            "reproducing": fam.reproducing,
            "unimodular": fam.unimodular,
            "stabilizer": fam.stabilizer or "-",
            "dim": fam.n + fam.hdim,
        })
    return rows
