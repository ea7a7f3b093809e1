"""JSON body descriptions with bit-exact numeric round-trip."""

from __future__ import annotations

import json
from pathlib import Path

from .base import Body
from .combinators import AffineImage, Intersection, Product, Suspension, Translate
from .polytopes import HPolytope, VPolytope, Zonotope
from .smooth import Ball, Ellipsoid, Epigraph19, PSDCap2


class BodyParseError(ValueError):
    """The body description is malformed."""


KINDS = (
    "hpolytope",
    "vpolytope",
    "ball",
    "ellipsoid",
    "zonotope",
    "psdcap2",
    "epigraph19",
    "intersection",
    "product",
    "affine_image",
    "translate",
    "suspension",
)


def body_from_dict(data: dict) -> Body:
    if not isinstance(data, dict) or "kind" not in data:
        raise BodyParseError("body description must be an object with a 'kind' field")
    kind = data["kind"]
    try:
        if kind == "hpolytope":
            return HPolytope(data["A"], data["b"])
        if kind == "vpolytope":
            return VPolytope(data["vertices"])
        if kind == "ball":
            return Ball(data["center"], data.get("radius", 1.0))
        if kind == "ellipsoid":
            return Ellipsoid(data["center"], data["shape"])
        if kind == "zonotope":
            return Zonotope(data["center"], data["generators"])
        if kind == "psdcap2":
            return PSDCap2()
        if kind == "epigraph19":
            return Epigraph19()
        if kind == "intersection":
            return Intersection(*[body_from_dict(b) for b in data["bodies"]])
        if kind == "product":
            return Product(*[body_from_dict(b) for b in data["bodies"]])
        if kind == "affine_image":
            return AffineImage(data["map"], body_from_dict(data["body"]), data.get("offset"))
        if kind == "translate":
            return Translate(body_from_dict(data["body"]), data["shift"])
        if kind == "suspension":
            return Suspension(body_from_dict(data["base"]), data.get("height", 1.0))
    except BodyParseError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise BodyParseError(f"invalid {kind} description: {exc}") from exc
    raise BodyParseError(f"unknown body kind {kind!r}")


def body_to_dict(body: Body) -> dict:
    return body.to_dict()


def dumps(body: Body) -> str:
    return json.dumps(body.to_dict())


def loads(text: str) -> Body:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise BodyParseError(f"invalid JSON: {exc}") from exc
    return body_from_dict(data)


def load(path) -> Body:
    return loads(Path(path).read_text(encoding="utf-8"))


def save(body: Body, path) -> None:
    Path(path).write_text(dumps(body), encoding="utf-8")
