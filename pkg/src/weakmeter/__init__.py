"""Pre/post-selected weak-measurement simulator with full pointer dynamics.

Layers, bottom up: ``hilbert`` (labeled tensor spaces and dense linear
algebra), ``meter`` (discrete Gaussian pointers), ``optics`` (component
unitaries and named interferometer states), ``weakvalue`` (observable
catalog and weak values), ``dynamics`` (couplings, evolution, pointer
fits), ``scenario`` (declarative experiment files), ``verify`` (the
built-in check suite), ``cli`` (the ``weakmeter`` command).
"""

from .dynamics import (
    CouplingSpec,
    EffectiveWeakValueFit,
    build_hamiltonian,
    disembodied_measurement,
    evolve_dyson2,
    evolve_exact,
    fit_effective_weak_value,
    parallel_arm_readout,
    post_select_meter,
)
from .errors import (
    AnnihilationError,
    DegeneratePostselectionError,
    IllConditionedFitError,
    ScenarioError,
    SignatureError,
    WeakmeterError,
)
from .hilbert import (
    Ket,
    Operator,
    SpaceSignature,
    dft_q_to_p,
    extend,
    identity,
    idft_p_to_q,
    inner,
    mat_exp,
    tensor,
)
from .meter import (
    ContinuousMoments,
    DiscreteGaussianMeter,
    MeterReadout,
    continuous_reference,
    make_meter,
    meter_readout,
    moments,
)
from .optics import (
    Component,
    Pipeline,
    component_unitary,
    named_state,
    prepare_preselected,
)
from .scenario import (
    ResultRecord,
    ScenarioDoc,
    parse_scenario,
    records_to_csv,
    records_to_jsonl,
    run_scenario,
)
from .weakvalue import (
    WeakValueResult,
    cheshire_table,
    disembodiment_table,
    noisy_effective_weak_value,
    observable,
    three_body_comparison,
    weak_value,
)

__version__ = "0.1.0"
