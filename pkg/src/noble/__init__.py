"""noble: rigorous verification toolkit for lattice bootstrap bounds.

Exact walk counting, certified walk-integral enclosures, translation of
coefficient ledgers into rewrite-level bounds, and the bootstrap verdict.
"""

from .bounds import Bound, interval_arith, set_precision
from .lattice import LatticePoint, OrbitSignature, canon_key, canonicalize
from .walks import (
    count_bond_sa,
    count_nbw,
    count_saw,
    count_srw,
    count_srw_loop_formula,
)
from .integrals import (
    IntegralTable,
    PointSetSpec,
    bessel_green,
    build_I_table,
    transition,
)
from .green import lambda_link, nbw_twopoint_k, srw_twopoint_k
from .aggregation import (
    MatrixBoundSpec,
    eigen_split,
    geometric_sum,
    scalar_series_sum,
)
from .rewrite import (
    BetaLedger,
    RewriteBounds,
    SeriesBounds,
    step1_simple_bounds,
    step2_R_l1,
    step3_step4_weighted,
    step5_lower_RF,
    translate,
)
from .engine import (
    BootstrapConfig,
    decide_P,
    decomposition_check,
    diagram_bounds,
    f3_improve,
    f3_initial,
    improve_f1,
    improve_f2,
    a_of_d,
)
from .ledger import parse_ledger

__version__ = "0.1.0"
