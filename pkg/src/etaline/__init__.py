"""Numerical toolkit for eta forms of tamed bundles, Chern-Simons and
Chern-Weil forms, Cheeger-Simons differential characters, transgressed line
bundles, and finite-dimensional Pfaffian/determinant line bundles on model
manifolds."""

from . import ad, geom, forms, cw, eta, diffchar, lbundle, pfaff, modelfields
from .geom import (Circle, Interval, Spin3, ChartedDomain, Cycle, Chain,
                   make_product, integrate, fiber_integrate, cycle_integrate)
from .forms import (GradedEndForm, ScalarForm, SuperTraceResult, EndFormField,
                    ScalarFormField, wedge, exterior_d, supertrace, graded_exp)
from .cw import GaugedConnection, curvature, chern_forms, cs_form, \
    curvature_correction
from .eta import Taming, build_taming, eta_form, eta1_family, evenness_defect
from .diffchar import DifferentialCharacter, p1half_character, \
    transgress_character
from .lbundle import LineBundleCocycle, build_L, holonomy, StringData, \
    string_section
from .pfaff import SkewFamily, SpectralCut, pfaffian, spectral_cut, \
    pfaff_bundle, det_bundle, quillen_report

__version__ = "0.1.0"
