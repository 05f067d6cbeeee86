"""Nash equilibria of finite games, their fixed-point indices, and unique-equilibrium embeddings."""

__version__ = "0.1.0"

from .errors import (  # noqa: E402
    BudgetExceeded,
    EqIndexError,
    IndexDisagreement,
    NotApplicable,
    StructureError,
    VerificationFailed,
)
from .game import (  # noqa: E402
    Game,
    GameEquilibriumPair,
    add_strategies,
    bimatrix,
    bonus_apply,
    delete_inferior_replies,
    delete_strategies,
    pairs_equivalent,
)
from .equilibria import (  # noqa: E402
    ComponentRecord,
    EnumerationOptions,
    EquilibriumRecord,
    enumerate_equilibria,
    equilibrium_components,
    is_equilibrium,
    sample_component,
)
from .index import (  # noqa: E402
    IndexReport,
    SolutionSet,
    classify,
    component_index,
    index_isolated,
    index_regular,
    indifference_jacobian,
    local_degree_oracle,
    nash_map,
)
from .constructions import (  # noqa: E402
    EmbeddingReport,
    corpus,
    embed_strict_dominators,
    iterated_strict_dominance,
    load_game,
    verify_unique,
)
