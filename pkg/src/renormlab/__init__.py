"""Certified renormalization laboratory for circle maps with breaks.

Exact rational arithmetic end to end: schedules of partial quotients,
convergent tables with certified enclosures, the normalized-length
fixed-point solver, piecewise-linear map algebra, the renormalization
pipelines, the surviving set, derivative probes of the conjugacy, and
invariant-measure histograms, all driven by one experiment runner.
"""

from .errors import (
    BreakCollisionError,
    CertificationError,
    CompositionError,
    ConstructionError,
    ExperimentError,
    RenormError,
    ResourceError,
    ScheduleError,
)
from .rational import RatInterval, format_rat, hull, rat_to_decimal
from .schedules import (
    QuotientSchedule,
    ValidationReport,
    evaluate_schedule,
    k_floor,
    parse_schedule,
    validate_hypotheses,
)
from .convergents import (
    ConvergentTable,
    RhoEnclosure,
    build_convergents,
    convergent,
    delta_intervals,
    prefix_interval,
    prefix_pq,
    rho_enclosure,
)
from .sequences import (
    SequenceSolution,
    SolverConfig,
    TailPolicy,
    solve_fixed_point,
    solve_schedule,
    verify_inequalities,
)
from .plmaps import (
    BreakPoint,
    CircleLift,
    PLMap,
    breaks_of,
    build_f0,
    compose,
    conjugate_by_translation,
    evaluate,
    evaluate_inverse,
    from_nodes,
    identity_map,
    invert,
    iterate_k,
    restrict,
    rigid_rotation,
    translation_map,
)
from .renorm import (
    CommutingPair,
    DynamicalPartition,
    RenormTrace,
    TeethReport,
    ThetaLevels,
    ToothSpec,
    build_partition,
    build_theta,
    chain_index,
    chain_midpoint,
    detect_height,
    distinct_break_orbits,
    expected_teeth_backward,
    expected_teeth_forward,
    expected_teeth_marked,
    gamma_deviation_check,
    gamma_segments,
    initial_pair,
    orbit_points,
    realize_chain,
    renorm_step,
    run_pipeline,
    sample_chains,
    verify_marked_teeth,
    verify_teeth,
)
from .conjugacy import (
    ControlReport,
    DensityHistogram,
    HeightsReadout,
    PartitionStream,
    ProbeConfig,
    ProbeReport,
    birkhoff_mean,
    build_control_lift,
    conjugacy_values,
    density_histogram,
    derivative_probe,
    partition_stream,
    prefix_value,
    probe_budgets,
    rotation_number_heights,
    singular_control,
    tune_control_offset,
    write_conjugacy_csv,
)
from .experiment import ExperimentConfig, load_config, run_experiment

__all__ = [
    "birkhoff_mean",
    "BreakCollisionError",
    "BreakPoint",
    "breaks_of",
    "build_control_lift",
    "build_convergents",
    "build_f0",
    "build_partition",
    "build_theta",
    "CertificationError",
    "chain_index",
    "chain_midpoint",
    "CircleLift",
    "CommutingPair",
    "compose",
    "CompositionError",
    "conjugacy_values",
    "conjugate_by_translation",
    "ConstructionError",
    "ControlReport",
    "convergent",
    "ConvergentTable",
    "delta_intervals",
    "density_histogram",
    "DensityHistogram",
    "derivative_probe",
    "detect_height",
    "distinct_break_orbits",
    "DynamicalPartition",
    "evaluate",
    "evaluate_inverse",
    "evaluate_schedule",
    "expected_teeth_backward",
    "expected_teeth_forward",
    "expected_teeth_marked",
    "ExperimentConfig",
    "ExperimentError",
    "format_rat",
    "from_nodes",
    "gamma_deviation_check",
    "gamma_segments",
    "HeightsReadout",
    "hull",
    "identity_map",
    "initial_pair",
    "invert",
    "iterate_k",
    "k_floor",
    "load_config",
    "orbit_points",
    "parse_schedule",
    "partition_stream",
    "PartitionStream",
    "PLMap",
    "prefix_interval",
    "prefix_pq",
    "prefix_value",
    "probe_budgets",
    "ProbeConfig",
    "ProbeReport",
    "QuotientSchedule",
    "rat_to_decimal",
    "RatInterval",
    "realize_chain",
    "renorm_step",
    "RenormError",
    "RenormTrace",
    "ResourceError",
    "restrict",
    "rho_enclosure",
    "RhoEnclosure",
    "rigid_rotation",
    "rotation_number_heights",
    "run_experiment",
    "run_pipeline",
    "sample_chains",
    "ScheduleError",
    "SequenceSolution",
    "singular_control",
    "solve_fixed_point",
    "solve_schedule",
    "SolverConfig",
    "TailPolicy",
    "TeethReport",
    "ThetaLevels",
    "ToothSpec",
    "translation_map",
    "tune_control_offset",
    "validate_hypotheses",
    "ValidationReport",
    "verify_inequalities",
    "verify_marked_teeth",
    "verify_teeth",
    "write_conjugacy_csv",
]
