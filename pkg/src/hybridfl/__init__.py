"""Privacy-preserving federated learning over threshold homomorphic encryption.

Parties add trust-calibrated differential-privacy noise to query
responses, encrypt them under a threshold Paillier key, and an
honest-but-curious aggregator combines ciphertexts to drive training of
decision trees, a feedforward network and a linear SVM.
"""

__version__ = "0.1.0"
