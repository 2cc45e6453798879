"""Semi-supervised variational latent control for spectrogram synthesis.

A self-contained numpy-based stack: dense-array reverse-mode autodiff,
speech signal metrics (mel/MFCC, MCD-DTW, YIN), a synthetic corpus with
known ground-truth control factors, a sequence-to-sequence spectrogram
model with monotonic GMM attention, the semi-supervised variational
objective, and training / objective evaluation tooling.
"""

__version__ = "0.1.0"
