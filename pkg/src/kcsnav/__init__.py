"""KCS waypoint-tracking autopilot lab: MMG dynamics, DDPG and PD+ILOS."""

__version__ = "0.1.0"
