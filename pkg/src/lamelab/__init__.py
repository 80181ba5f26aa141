"""Numerical toolkit for singular Liouville equations on flat tori.

Submodules: ``elliptic`` (theta/Weierstrass kernel), ``green`` (torus
Green function and Hecke function), ``curves`` (Lame spectral curves and
pre-modular forms), ``polysys`` (log-free polynomial systems and degree
counts), ``monodromy`` (numerical monodromy classification), ``cli``.
"""

from .elliptic import (
    LatticeContext,
    TorusPoint,
    check_identities,
    eisenstein,
    make_context,
    sigma_w,
    taylor_data,
    theta1,
    weierstrass,
    wp_inverse,
    zeta_w,
)
from .green import (
    CriticalSet,
    classify_omega,
    critical_points,
    green_value,
    hecke_Z,
    hecke_Z_qseries,
)
from .curves import (
    Wn_eval,
    XnPoint,
    Zn_premodular,
    find_type2,
    hermite_halphen,
    lame_ln,
    lame_sk,
    point_on_Xn,
    sigma_n_degree_probe,
    spectral_poly,
    zn_value,
)
from .polysys import (
    LameParams,
    MultiPoly,
    SolveConfig,
    SourceDivisor,
    build_system,
    degree_formula,
    ehat_eval,
    germ_constraints,
    germ_series,
    solve_system,
    symmetric_even_family,
    symmetric_reduce,
    top_term_closed,
    top_term_recursive,
    verify_l4_identity,
)
from .monodromy import (
    MonodromyPair,
    classify_projective,
    local_monodromy,
    monodromy_pair,
    period_integral,
    potential,
    transport,
    u_density,
    unitarizable,
)

__version__ = "0.1.0"
