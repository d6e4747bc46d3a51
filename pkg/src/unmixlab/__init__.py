"""unmixlab: a desk-scale hyperspectral unmixing toolkit.

Simulates linear and nonlinear spectral mixing, generates spatially
correlated synthetic scenes, unmixes them with classical constrained
least-squares baselines or a bi-directional adversarial network, and
scores the results with the standard abundance and reconstruction
metrics.
"""

from .baselines import BASELINES, FitResult, fcls, fit_mlm, fit_ppnm
from .errors import (
    ConfigError,
    CorruptFileError,
    DataError,
    NumericalError,
    UnmixlabError,
)
from .io import (
    ConstantCubeWarning,
    bundled_library_path,
    load_abundance,
    load_cube,
    load_endmember_library,
    normalize_cube,
    save_abundance,
    save_abundance_png,
    save_cube,
)
from .losses import LOSS_TERMS, LcguConfig, LcguNets, total_loss
from .metrics import (
    EvalReport,
    aad,
    aid,
    align_endmembers,
    evaluate,
    permute_channels,
    re,
    sad,
)
from .mine import MineStatistics, dv_bound, estimate_mutual_information
from .mixing import add_noise, empirical_snr_db, mix_cube, mix_pixel
from .networks import (
    MixGenerator,
    PatchAutoencoder,
    PatchDiscriminator,
    UnmixGenerator,
    endmember_plane,
)
from .patches import PatchSet, extract_patches, stitch_average
from .scene import (
    SceneRecipe,
    generate_abundance,
    sample_dirichlet,
    smooth_simplex_field,
    synthesize_scene,
    synthetic_endmembers,
)
from .trainer import (
    LcguState,
    TrainingConfig,
    TrainingLog,
    evaluate_cycle,
    load_checkpoint,
    pretrain_ae,
    save_checkpoint,
    train,
    unmix_cube,
)
from .types import AbundanceMap, EndmemberMatrix, MixingModelSpec, SpectralCube

__version__ = "0.1.0"

__all__ = [
    "AbundanceMap",
    "BASELINES",
    "ConfigError",
    "ConstantCubeWarning",
    "CorruptFileError",
    "DataError",
    "EndmemberMatrix",
    "EvalReport",
    "FitResult",
    "LOSS_TERMS",
    "LcguConfig",
    "LcguNets",
    "LcguState",
    "MineStatistics",
    "MixGenerator",
    "MixingModelSpec",
    "NumericalError",
    "PatchAutoencoder",
    "PatchDiscriminator",
    "PatchSet",
    "SceneRecipe",
    "SpectralCube",
    "TrainingConfig",
    "TrainingLog",
    "UnmixGenerator",
    "UnmixlabError",
    "aad",
    "add_noise",
    "aid",
    "align_endmembers",
    "permute_channels",
    "bundled_library_path",
    "dv_bound",
    "empirical_snr_db",
    "endmember_plane",
    "estimate_mutual_information",
    "evaluate",
    "evaluate_cycle",
    "extract_patches",
    "fcls",
    "fit_mlm",
    "fit_ppnm",
    "generate_abundance",
    "load_abundance",
    "load_checkpoint",
    "load_cube",
    "load_endmember_library",
    "mix_cube",
    "mix_pixel",
    "normalize_cube",
    "pretrain_ae",
    "re",
    "sad",
    "sample_dirichlet",
    "smooth_simplex_field",
    "save_abundance",
    "save_abundance_png",
    "save_checkpoint",
    "save_cube",
    "stitch_average",
    "synthesize_scene",
    "synthetic_endmembers",
    "total_loss",
    "train",
    "unmix_cube",
]
