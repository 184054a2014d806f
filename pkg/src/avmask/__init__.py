"""Audio-visual de-identification engine.

Masks people in research footage: hiding kernels destroy identifiable
pixels, landmark overlays preserve motion information, and parametric
voice anonymization handles the audio track.  A manager/worker pair
distributes large videos in chunks; the metrics package scores the
privacy/utility trade-off of the result.
"""

__version__ = "0.1.0"
