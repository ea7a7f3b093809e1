"""Convex bodies behind membership, support and projection oracles."""

from .base import Body, HForm, Membership, UnsupportedOperation
from .combinators import AffineImage, Intersection, Product, Suspension, Translate, UnsupportedImage
from .extent import Extent, NotInBodyError, line_extent
from .io import BodyParseError, body_from_dict, body_to_dict, dumps, load, loads, save
from .polytopes import HPolytope, VPolytope, Zonotope, face_decompose_zonotope
from .smooth import Ball, Ellipsoid, Epigraph19, PSDCap2

__all__ = [
    "AffineImage",
    "Ball",
    "Body",
    "BodyParseError",
    "Ellipsoid",
    "Epigraph19",
    "Extent",
    "HForm",
    "HPolytope",
    "Intersection",
    "Membership",
    "NotInBodyError",
    "PSDCap2",
    "Product",
    "Suspension",
    "Translate",
    "UnsupportedImage",
    "UnsupportedOperation",
    "VPolytope",
    "Zonotope",
    "body_from_dict",
    "body_to_dict",
    "dumps",
    "face_decompose_zonotope",
    "line_extent",
    "load",
    "loads",
    "save",
]
