from ._rfdlab import (
    AccessError,
    CalibrationError,
    ConfigError,
    Dataset,
    DefensePolicy,
    DomainError,
    FormatError,
    Model,
    Oracle,
    ShapeError,
    TrainingError,
    accuracy,
    calibrate_nu,
    cauchy_ratio_scale,
    empirical_flip_prob,
    load_dataset,
    load_model,
    make_dataset,
    model_from_json,
    predicted_flip_prob,
    run_attack,
    run_command,
    theorem_grid_csv,
    train,
)

__all__ = [name for name in dir() if not name.startswith("_")]
