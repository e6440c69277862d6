"""whispermine: mining clean whispered speech from long noisy recordings.

Pipeline: whisper activity detection (RASTA-PLP features + SVM/MLP/LSTM
classifiers) -> noise harvesting -> human-in-the-loop bulk labelling ->
SNR-controlled augmentation -> fine-tuned clean-whisper detection.
"""

__version__ = "0.1.0"
