"""neuromanip: a fully simulated gaze-guided EMG prosthetic hand controller.

Modules
-------
signal      EMG synthesis, conditioning, windowing, features
classify    dense gesture classifier and its spiking conversion
scene       3-D scene, gaze fixation, ROI extraction, oracle detector
grasp       grasp library and the context-to-candidates restriction
controller  deterministic grasp state machine (the safety gate)
harness     config, datasets, evaluation, study analytics, CLI, service
"""

from .signal import (
    EmgFrame,
    EmgWindow,
    GestureLabel,
    SynthEmgModel,
    design_filter_chain,
    extract_features,
    filter_stream,
    synth_emg,
    window_stream,
)
from .classify import (
    ClassifyResult,
    DenseNet,
    EnergyReport,
    GesturePipeline,
    SpikingNetwork,
    classify_window,
    convert_to_snn,
    dense_forward,
    encode_rate,
    snn_infer,
    train_dense,
)
from .grasp import (
    CandidateSet,
    GraspLibrary,
    GraspPattern,
    context_to_grasps,
    cycle_alternative,
    restrict_classify,
)
from .scene import (
    Camera,
    Detection,
    FixationEvent,
    Frame,
    GazeSample,
    Roi,
    Scene,
    SceneObject,
    depth_from_disparity,
    detect_fixation,
    detect_objects,
    extract_rois,
    gaze_object_intersection,
)
from .controller import (
    ActuatorCommand,
    ControllerConfig,
    audit_command_log,
    run_trace,
    step,
)

__version__ = "0.1.0"
