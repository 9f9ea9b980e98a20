"""cojoin - heterogeneous CPU/GPU hash-join co-processing engine"""

__version__ = "0.1.0"
__author__ = "maxazure"
