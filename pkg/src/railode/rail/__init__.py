"""Railway problems, their route structure and the BMC encoder."""

from .model import (AbsoluteTiming, Connection, EncodingConfig, Network, Ordering, ProblemError, RailNode,
                    RailwayProblem, RelativeTiming, SAnd, Segment, SNot, SOr, TrainSpec, Visit, load_problem,
                    parse_schedule, save_problem, schedule_text, schedule_visits)
from .paths import EncodingWarning, Routes, count_paths, enumerate_paths, successor_relation
from .encoder import Encoder, Encoding, encode, encoder_rule_count, encoding_from_formula
