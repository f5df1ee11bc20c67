"""Controllable human-chair interaction synthesis.

Subpackages:
    kinematics  skeleton, rotations, forward/inverse kinematics, trajectory windows
    scene       chair meshes, voxel encodings, contact detection/projection
    neural      dense / recurrent / mixture-of-experts substrate with explicit backward
    dataio      sequence files, synthetic dataset generator, augmentation, cleanup
Top-level modules:
    controlnet  hand-trajectory planner (recurrent)
    posenet     autoregressive full-body predictor (mixture of experts)
    contactnet  generative contact sampler (conditional VAE)
    runtime     episode synthesis loop
    metrics     contact accuracy and diversity measures
    service     HTTP/WebSocket API
"""

__version__ = "0.1.0"
