"""Subgoal-level evaluation of robot manipulation trajectories with a VLM judge."""

__version__ = "0.1.0"

from .config import EvalConfig, load_config
from .cost import CostModel, batch_cost_summary, estimate_tokens, project_budget, trajectory_cost
from .judge import MockJudgeSpec, Verdict, judge_trajectory, mock_judge, parse_verdict, replay_backend
from .metrics import confusion_matrices, per_subgoal_accuracy, success_summary, task_eval_accuracy
from .prompt import PromptStrategy, PromptTemplate, builtin_templates
from .report import EvalReport, build_report, export_leaderboard, render_markdown
from .rubric import Subgoal, SubgoalRubric, load_rubric, save_rubric, validate_outcome_vector
from .trajectory import FramePolicy, Trajectory, load_manifest, sample_frames, select_views, subgoal_window
