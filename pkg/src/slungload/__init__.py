"""Quadrotor slung-payload simulator, RL environments, PPO trainer, evaluator."""

from .dynamics import (CableMode, Command, PhysicalParams, SystemState, Transition,
                       apply_taut_impulse, cable_tension, detect_transition,
                       hover_state, hybrid_step, rate_loop, step_slack, step_taut)
from .env import (ACTION_DIM, OBS_DIM, DomainRandomization, Env, EnvConfig,
                  NormalizationConstants, RewardBreakdown, RewardConfig, VecEnv,
                  build_observation, denormalize_action, deviation_angles,
                  gate_events, reward_gate, reward_general, reward_target)
from .errors import (ConfigError, ContextMismatch, DegenerateGeometry,
                     DimensionMismatch, EmptyLog, FormatError, ModeError,
                     NonFiniteLoss, NonFiniteState, SlungloadError,
                     SteppedAfterDone, TrackError)
from .evaluator import (MetricsReport, ReplayReport, RolloutLog, aggregate,
                        compute_metrics, export_log_csv, export_log_json, load_log,
                        replay_log, run_rollout)
from .learner import (PpoConfig, RolloutBuffer, TrainResult, collect_rollout,
                      compute_gae, ppo_loss_and_grads, ppo_update, sample_action,
                      squashed_log_prob, train)
from .nets import (PolicyParams, init_policy, load_checkpoint, policy_forward,
                   save_checkpoint)
from .scenario import (GateEvent, GateSpec, TrackSpec, Workspace, cable_gate_collision,
                       gate_crossing, get_track, list_tracks, segment_point_distance,
                       waypoint_progress, workspace_violation)

__version__ = "0.1.0"
