"""vitaltrace: contact-free breathing-rate and heart-rate estimation from
consumer-camera frame sequences."""

__version__ = "0.1.0"
