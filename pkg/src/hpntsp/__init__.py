"""Hybrid pointer network for the Euclidean TSP, with classical baselines and a TSPLIB harness."""
from .heuristics import farthest_insertion, nearest_neighbor, random_tour, two_opt
from .model import HPN, ModelConfig
from .train import TrainConfig, paired_t_test_one_sided, regime, train
from .tsp import Instance, Tour, brute_force_optimal, euclidean, generate_uniform, tour_length
from .tsplib import denormalize_length, normalize, parse_tsplib, read_tsplib

__version__ = "0.1.0"
