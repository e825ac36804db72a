"""Inverse-kinematics learning by coordinated sampling and training."""

from ._accel import BACKEND
from .core import (EmsslConfig, LearningCurve, SampleSet, batch_infer, consistency_gap,
                   emssl_run, evaluate_distance_error, parallel_fm, sampling_round, train_phase)
from .datagen import LabeledSet, NormalizerPair, fit_normalizers, sample_joint_dataset, split
from .kinematics import (DEFAULT6, KinematicChain, default6, fk, joint_jacobian, link_jacobian,
                         make_chain, perturb_link_lengths)
from .neuralnet import Mlp, adam_init, adam_step, backward, forward, init_mlp, mse_loss_and_grad

__version__ = "0.1.0"
