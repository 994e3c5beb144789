"""Information reconciliation of Gaussian-correlated sources with non-binary LDPC codes."""

from .decoder import DecodeResult, DecoderConfig, check_update, decode
from .gf import GaloisField, get_field, gf_add, gf_inv, gf_mul, iwht, wht
from .ldpc import (PROFILES, DegreeDistribution, RegularProfile, SparseParityCheck, assign_labels,
                   make_code, node_degrees_from_lambda, peg_construct, syndrome)
from .protocol import (NonBinaryReconciler, ProtocolParams, ReconciliationReport, alice_messages,
                       bob_reconcile, efficiency, reconcile, source_rate)
from .quantizer import (GridQuantizer, QuantizationGrid, SymbolSplit, apriori_vector, apriori_vectors,
                        conditional_entropy_mc, discrete_entropy, interval_prob,
                        quantization_efficiency, quantize, recombine, split_symbol)
from .source import (FramePair, SourceModel, conditional_params, mutual_information, rho_to_snr,
                     sample_frames, scale_frame, snr_to_rho)

__version__ = "0.1.0"
