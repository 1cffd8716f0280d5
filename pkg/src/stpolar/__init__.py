"""Signal design toolkit for slow-fading MIMO broadcast links.

Parameterized space-time block codes, set-partition labelling, multilevel
polar coded-modulation with multistage decoding, Monte-Carlo information and
outage estimators with closed-form pairwise-outage bounds, and a
particle-swarm optimizer for outage-based and joint code/modulation design.
"""

__version__ = "0.1.0"

from .channel import (ChannelBatch, NoiseSpec, frobenius_sq, n0_from_snr_db,
                      sample_channel_batch, sample_noise)
from .constellation import Constellation, make_constellation
from .stbc import (Codebook, DifferenceMatrix, SpaceTimeSymbol, StbcSpec,
                   TvPhases, build_stbc, difference, encode_symbol,
                   enumerate_codebook, min_det_coding_gain, pep_upper_bound,
                   sample_tv_phases)
from .mapping import (MeasureContext, SetPartitionMap, identity_spm,
                      pair_distance, set_merge_labeling)
from .infotheory import (MiSamples, OmegaMoments, bhattacharyya,
                         bhattacharyya_tv_avg, cutoff_rate, kl_divergence,
                         level_llr, levelwise_mi, ln_bessel_i0_approx,
                         log_likelihood, lognormal_fit_divergence, mi_samples,
                         mutual_information, omega_moments, outage_capacity,
                         outage_probability, pairwise_outage_bound_sbc,
                         pairwise_outage_bound_stbc,
                         pairwise_outage_bound_tvsbc, q_from_rate)
from .polar import (BitChannelRanking, MlpcmCode, mlpcm_encode, msd_decode,
                    outage_rule_rates, polar_transform, rank_bit_channels,
                    sc_decode, select_information_sets)
from .optimizer import (BatchSpec, JointDesignResult, MinSnrResult, PsoConfig,
                        PsoResult, SearchSpace, joint_design,
                        min_snr_for_target, objective_outage, pso_minimize)
from .fersim import FerResult, simulate_fer
