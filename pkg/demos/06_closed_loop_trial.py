"""One complete closed-loop trial, narrated.

Gaze settles on a cup, the candidate set arms the controller, a stream of
EMG windows confirms the cylindrical grip, the hand ramps closed, holds,
and releases. A second run intends a gesture the cup does not admit and
shows the controller discarding it.
"""

from neuromanip.harness.config import RunConfig, resolve_library, resolve_model, resolve_scene
from neuromanip.harness.simulate import Scenario, simulate
from neuromanip.signal import GestureLabel

config = RunConfig()
pipeline = resolve_model(config)
scene, lib = resolve_scene(config), resolve_library(config)

print("=== trial 1: fixate the cup, intend a cylindrical grip ===")
ok = Scenario("cup-cylindrical", fixate_object=0,
              intend=GestureLabel.CYLINDRICAL_GRIP,
              expect_grasp=GestureLabel.CYLINDRICAL_GRIP)
log = simulate(ok, pipeline, scene, lib, seed=config.seed)
print(f"fixated object:   {log.fixated_object} (dwell {log.fixation_dwell_ms:.0f} ms)")
print(f"detector saw:     {log.detection_class} at {log.depth_m:.2f} m")
print(f"decisions:        {[(d['label'], d['confidence']) for d in log.decisions[:6]]}")
print(f"executed grasp:   {log.executed.name if log.executed else None}")
print(f"final state:      {log.final_state}, commands {log.commands}, "
      f"rejected {log.rejected}, unsafe {log.unsafe_executions}")
assert log.ok(ok.expect_grasp)

print("\n=== trial 2: same cup, intend an open hand (not offered) ===")
blocked = Scenario("cup-open-hand", fixate_object=0,
                   intend=GestureLabel.OPEN_HAND, expect_grasp=None)
log = simulate(blocked, pipeline, scene, lib, seed=config.seed)
print(f"executed grasp:   {log.executed}")
print(f"rejected:         {log.rejected} decisions discarded by the safety gate")
print(f"unsafe:           {log.unsafe_executions}")
assert log.ok(None)

print("\nno out-of-candidate grasp can execute; the discard counter shows "
      "the gate doing its job.")
