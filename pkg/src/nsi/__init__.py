"""Logic programs on the Cantor set.

Parse a normal logic program, enumerate its ground atoms, embed
interpretations into the Cantor set as exact digit strings, evaluate and
iterate the embedded immediate consequence operator, approximate its graph
by fractal interpolation systems and trained feedforward networks, and
encode the fractal systems as recurrent networks.
"""

from .cantor import (
    CantorPoint,
    DigitConfig,
    EmbeddedValue,
    embed,
    embedded_tp,
    to_real,
    unembed,
)
from .consequence import (
    AcyclicityReport,
    LipschitzEstimate,
    TpTrace,
    apply_tp,
    check_acyclic,
    estimate_lipschitz,
    iterate_tp,
)
from .errors import NsiError
from .fractal import (
    AffineMap,
    FractalInterpolator,
    Ifs,
    PointCloud,
    RecurrentNet,
    SampleSet,
    attractor_points,
    build_fif_ifs,
    chaos_orbit,
    convergence_report,
    encode_ifs_as_recurrent_net,
    eval_fif,
    fif_from_nodes,
    one_hot,
    sample_embedded_tp,
)
from .herbrand import (
    Interpretation,
    LevelMapping,
    enumerate_base,
    enumerate_base_covering,
    first_disagreement,
    level_of,
)
from .logic import (
    Atom,
    Clause,
    Compound,
    GroundProgram,
    Literal,
    Program,
    Variable,
    ground_program,
    is_propositional,
    parse_program,
)
from .network import (
    CoreTrace,
    FeedforwardNet,
    SquashingNetRegressor,
    ThresholdNet,
    TrainReport,
    build_core_network,
    eval_ffn,
    gradient_check,
    recur_ffn,
    run_core_network,
    train_ffn,
)

__version__ = "0.1.0"
