"""Friendship distances from geo-tagged mention streams and double power-law fitting."""

from geofriends.geodesy import EarthModel, GeoPoint, destination_point, great_circle_distance
from geofriends.ingest import MentionRecord, LocationSample, RegionFilter, parse_mention_line
from geofriends.friendship import FriendPair, ExchangeEvent, FriendshipConfig, build_friendship_distances
from geofriends.mobility import MobilityProfile, velocity_profile, static_fraction
from geofriends.distfit import (
    BinnedDistribution,
    DoublePowerLawFit,
    PowerLawSegment,
    fit_double_power_law,
    fit_single_power_law,
    log_bin,
)
from geofriends.synth import SynthConfig, generate_mention_stream, generate_pairs

__version__ = "0.1.0"
