"""Statistical regularities of mass phenomena on finite alphabets.

Realize, estimate and compare regularities (closed sets of probability
vectors) and rank decisions against them.
"""

from statreg.decision import (
    CriterionReport,
    LossMatrix,
    bayes,
    minimax,
    regularity_criterion,
    verify_proposition3,
)
from statreg.empirics import (
    LimitSetEstimate,
    Trajectory,
    average_trajectory,
    empirical_measure,
    estimate_limit_set,
    net_trajectory,
    prefix_trajectory,
    s_equivalent,
    separating_function,
)
from statreg.measures import (
    Alphabet,
    Measure,
    RationalMeasure,
    Regularity,
    TestFunction,
    convexify,
    expectation,
    hausdorff,
    image,
    make_measure,
    stochastic_subalgebra,
    tv_distance,
)
from statreg.realization import (
    RealizationSchedule,
    SamplingNet,
    SymbolSequence,
    iid_generate,
    net_realize,
    rationalize,
    sequence_realize,
    tuple_from_rational,
)

__version__ = "0.1.0"
