"""
uavport - Airport to unloading-station UAV delivery simulator

A deterministic fleet-scheduling simulator and middleware for UAV parcel
delivery from a central airport:
- Per-vehicle UAV and AGV finite state machines
- Master / UAV-management / AGV-management nodes over an in-process bus
- Ground AGV loop scheduling (One-, Two- and Three-Cycle layouts)
- Air traffic admission control with arrival and landing reservations
- Delivery scoring, busy-ratio metrics and an independent trace verifier
"""

__version__ = "1.0.0"
__author__ = "uavport Project"
