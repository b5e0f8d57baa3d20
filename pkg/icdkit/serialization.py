"""
icdkit - JSON codecs

Every file format read or written by the command line lives here. Complex
numbers are [re, im] pairs; matrices are lists of rows of such pairs. A plain
real number is accepted wherever a complex one is expected.

Codecs are grouped per entity as classes of static methods, with module-level
aliases for the common calls. Malformed documents raise SerializationError
naming the JSON path of the offending field.
"""

import json
import logging
import os
from typing import Any, Dict, List, Optional

import numpy as np

from icdkit.algebra import AlgebraElement, BlockAlgebra, make_algebra
from icdkit.diagram import Generator, Signature
from icdkit.errors import IcdKitError, SerializationError
from icdkit.morphism import UMap, from_kraus
from icdkit.nullspace import NullspaceBasis
from icdkit.power import ExchangeableFamily, tensor_power
from icdkit.states import StateOnAlgebra
from icdkit.definetti import MixingAtom, MixingMeasure

logger = logging.getLogger(__name__)


def _require(doc: Any, key: str, path: str) -> Any:
    if not isinstance(doc, dict):
        raise SerializationError(f"{path}: expected an object")
    if key not in doc:
        raise SerializationError(f"{path}: missing field {key!r}")
    return doc[key]


def _complex(value: Any, path: str) -> complex:
    if isinstance(value, bool):
        raise SerializationError(f"{path}: expected a number or [re, im]")
    if isinstance(value, (int, float)):
        return complex(value)
    if isinstance(value, list) and len(value) == 2 and all(
            isinstance(v, (int, float)) and not isinstance(v, bool) for v in value):
        return complex(value[0], value[1])
    raise SerializationError(f"{path}: expected a number or [re, im], got {value!r}")


def encode_complex(z: complex) -> List[float]:
    z = complex(z)
    return [float(z.real), float(z.imag)]


def encode_matrix(m: np.ndarray) -> List[List[List[float]]]:
    return [[encode_complex(z) for z in row] for row in np.asarray(m)]


def decode_matrix(doc: Any, path: str, shape: Optional[tuple] = None) -> np.ndarray:
    if not isinstance(doc, list) or not all(isinstance(r, list) for r in doc):
        raise SerializationError(f"{path}: expected a list of rows")
    width = len(doc[0]) if doc else 0
    if any(len(r) != width for r in doc):
        raise SerializationError(f"{path}: rows have different lengths")
    m = np.array([[_complex(v, f"{path}[{i}][{j}]") for j, v in enumerate(r)] for i, r in enumerate(doc)],
                 dtype=complex).reshape(len(doc), width)
    if shape is not None and m.shape != tuple(shape):
        raise SerializationError(f"{path}: expected shape {tuple(shape)}, got {m.shape}")
    return m


def _wrap(path: str, err: IcdKitError) -> SerializationError:
    if isinstance(err, SerializationError):
        return err
    return SerializationError(f"{path}: {err}")


class AlgebraCodec:

    @staticmethod
    def encode(a: BlockAlgebra) -> Dict[str, Any]:
        doc: Dict[str, Any] = {"blocks": list(a.blocks)}
        if a.label:
            doc["label"] = a.label
        return doc

    @staticmethod
    def decode(doc: Any, path: str = "$") -> BlockAlgebra:
        blocks = _require(doc, "blocks", path)
        if not isinstance(blocks, list) or not all(isinstance(n, int) and not isinstance(n, bool) for n in blocks):
            raise SerializationError(f"{path}.blocks: expected a list of integers")
        label = doc.get("label")
        if label is not None and not isinstance(label, str):
            raise SerializationError(f"{path}.label: expected a string")
        try:
            return make_algebra(blocks, label)
        except IcdKitError as e:
            raise _wrap(f"{path}.blocks", e)


class ElementCodec:

    @staticmethod
    def encode(x: AlgebraElement) -> Dict[str, Any]:
        return {"algebra": AlgebraCodec.encode(x.parent), "mats": [encode_matrix(m) for m in x.mats]}

    @staticmethod
    def decode(doc: Any, path: str = "$") -> AlgebraElement:
        a = AlgebraCodec.decode(_require(doc, "algebra", path), f"{path}.algebra")
        mats = _require(doc, "mats", path)
        if not isinstance(mats, list) or len(mats) != len(a.blocks):
            raise SerializationError(f"{path}.mats: expected {len(a.blocks)} block matrices")
        return a.element([decode_matrix(m, f"{path}.mats[{i}]", (n, n))
                          for i, (m, n) in enumerate(zip(mats, a.blocks))])


class MorphismCodec:

    @staticmethod
    def encode(phi: UMap) -> Dict[str, Any]:
        return {
            "dom": AlgebraCodec.encode(phi.dom),
            "cod": AlgebraCodec.encode(phi.cod),
            "op_matrix": encode_matrix(phi.op_matrix),
        }

    @staticmethod
    def decode(doc: Any, path: str = "$") -> UMap:
        dom = AlgebraCodec.decode(_require(doc, "dom", path), f"{path}.dom")
        cod = AlgebraCodec.decode(_require(doc, "cod", path), f"{path}.cod")
        if "kraus" in doc:
            kraus = doc["kraus"]
            if not isinstance(kraus, list) or not kraus:
                raise SerializationError(f"{path}.kraus: expected a non-empty list of matrices")
            shape = (sum(cod.blocks), sum(dom.blocks))
            ops = [decode_matrix(k, f"{path}.kraus[{i}]", shape) for i, k in enumerate(kraus)]
            try:
                return from_kraus(dom, cod, ops)
            except IcdKitError as e:
                raise _wrap(f"{path}.kraus", e)
        m = decode_matrix(_require(doc, "op_matrix", path), f"{path}.op_matrix", (dom.dim, cod.dim))
        return UMap(dom, cod, m)


class StateCodec:

    @staticmethod
    def encode(psi: StateOnAlgebra) -> Dict[str, Any]:
        return {
            "algebra": AlgebraCodec.encode(psi.parent),
            "densities": [encode_matrix(d) for d in psi.densities],
            "weights": list(psi.weights),
        }

    @staticmethod
    def decode(doc: Any, path: str = "$", algebra: Optional[BlockAlgebra] = None) -> StateOnAlgebra:
        """Full state object, or a bare list of per-block matrices with the weights folded in."""
        if isinstance(doc, list):
            if algebra is None:
                raise SerializationError(f"{path}: a bare density list needs a known algebra")
            if len(doc) != len(algebra.blocks):
                raise SerializationError(f"{path}: expected {len(algebra.blocks)} block matrices")
            mats = [decode_matrix(m, f"{path}[{i}]", (n, n)) for i, (m, n) in enumerate(zip(doc, algebra.blocks))]
            try:
                return StateOnAlgebra.from_block_densities(algebra, mats)
            except IcdKitError as e:
                raise _wrap(path, e)
        a = AlgebraCodec.decode(_require(doc, "algebra", path), f"{path}.algebra")
        if algebra is not None and a != algebra:
            raise SerializationError(f"{path}.algebra: expected {algebra}, got {a}")
        dens = _require(doc, "densities", path)
        weights = _require(doc, "weights", path)
        if not isinstance(dens, list) or len(dens) != len(a.blocks):
            raise SerializationError(f"{path}.densities: expected {len(a.blocks)} matrices")
        if not isinstance(weights, list) or len(weights) != len(a.blocks):
            raise SerializationError(f"{path}.weights: expected {len(a.blocks)} numbers")
        mats = [decode_matrix(m, f"{path}.densities[{i}]", (n, n)) for i, (m, n) in enumerate(zip(dens, a.blocks))]
        try:
            return StateOnAlgebra(a, mats, [float(w) for w in weights])
        except (IcdKitError, TypeError, ValueError) as e:
            raise SerializationError(f"{path}: {e}")


class FamilyCodec:

    @staticmethod
    def encode(fam: ExchangeableFamily) -> Dict[str, Any]:
        return {
            "base": AlgebraCodec.encode(fam.base),
            "side": AlgebraCodec.encode(fam.side),
            "maxDegree": fam.max_degree,
            "states": [StateCodec.encode(s) for s in fam.states],
        }

    @staticmethod
    def decode(doc: Any, path: str = "$") -> ExchangeableFamily:
        base = AlgebraCodec.decode(_require(doc, "base", path), f"{path}.base")
        side = AlgebraCodec.decode(doc["side"], f"{path}.side") if "side" in doc else make_algebra([1])
        states = _require(doc, "states", path)
        if not isinstance(states, list) or not states:
            raise SerializationError(f"{path}.states: expected a non-empty list")
        max_degree = doc.get("maxDegree", len(states) - 1)
        if max_degree != len(states) - 1:
            raise SerializationError(f"{path}.maxDegree: {max_degree} does not match {len(states)} states")
        decoded = [StateCodec.decode(s, f"{path}.states[{n}]", tensor_power(base, n, side))
                   for n, s in enumerate(states)]
        try:
            return ExchangeableFamily(base, side, decoded)
        except IcdKitError as e:
            raise _wrap(f"{path}.states", e)


class MeasureCodec:

    @staticmethod
    def encode(mu: MixingMeasure) -> Dict[str, Any]:
        atoms = []
        for atom in mu.atoms:
            entry = {"weight": atom.weight, "psi": StateCodec.encode(atom.psi)}
            if atom.omega is not None:
                entry["omega"] = StateCodec.encode(atom.omega)
            atoms.append(entry)
        doc = {"base": AlgebraCodec.encode(mu.atoms[0].psi.parent), "atoms": atoms}
        if mu.atoms[0].omega is not None:
            doc["side"] = AlgebraCodec.encode(mu.atoms[0].omega.parent)
        return doc

    @staticmethod
    def decode(doc: Any, path: str = "$") -> MixingMeasure:
        base = AlgebraCodec.decode(_require(doc, "base", path), f"{path}.base")
        side = AlgebraCodec.decode(doc["side"], f"{path}.side") if "side" in doc else None
        atoms = _require(doc, "atoms", path)
        if not isinstance(atoms, list) or not atoms:
            raise SerializationError(f"{path}.atoms: expected a non-empty list")
        out = []
        for j, atom in enumerate(atoms):
            p = f"{path}.atoms[{j}]"
            weight = _require(atom, "weight", p)
            if not isinstance(weight, (int, float)) or isinstance(weight, bool):
                raise SerializationError(f"{p}.weight: expected a number")
            psi = StateCodec.decode(_require(atom, "psi", p), f"{p}.psi", base)
            omega = None
            if side is not None:
                omega = StateCodec.decode(_require(atom, "omega", p), f"{p}.omega", side)
            out.append(MixingAtom(float(weight), psi, omega))
        return MixingMeasure(out)


class SignatureCodec:

    @staticmethod
    def encode(sig: Signature) -> Dict[str, Any]:
        return {
            "objects": {name: AlgebraCodec.encode(a) for name, a in sig.objects.items()},
            "generators": {
                name: {"dom": list(g.dom), "cod": list(g.cod), "map": MorphismCodec.encode(g.map)}
                for name, g in sig.generators.items()
            },
        }

    @staticmethod
    def decode(doc: Any, path: str = "$") -> Signature:
        objects_doc = _require(doc, "objects", path)
        if not isinstance(objects_doc, dict):
            raise SerializationError(f"{path}.objects: expected an object")
        objects = {name: AlgebraCodec.decode(a, f"{path}.objects.{name}") for name, a in objects_doc.items()}
        gens_doc = doc.get("generators", {})
        if not isinstance(gens_doc, dict):
            raise SerializationError(f"{path}.generators: expected an object")
        generators = {}
        for name, g in gens_doc.items():
            p = f"{path}.generators.{name}"
            dom, cod = _require(g, "dom", p), _require(g, "cod", p)
            if not isinstance(dom, list) or not isinstance(cod, list):
                raise SerializationError(f"{p}: dom and cod must be lists of object names")
            generators[name] = Generator(tuple(dom), tuple(cod), MorphismCodec.decode(_require(g, "map", p), f"{p}.map"))
        try:
            return Signature(objects, generators)
        except IcdKitError as e:
            raise _wrap(path, e)


class NullspaceCodec:

    @staticmethod
    def encode(ns: NullspaceBasis) -> Dict[str, Any]:
        return {
            "kind": ns.kind,
            "algebra": AlgebraCodec.encode(ns.parent),
            "dim": ns.dim,
            "basis": [ElementCodec.encode(x)["mats"] for x in ns.basis],
        }


def load_json(arg: str) -> Any:
    """Inline JSON (starting with '{' or '[') or the path of a JSON file."""
    text = arg.strip()
    if text[:1] in ("{", "["):
        source = "inline argument"
    else:
        if not os.path.isfile(arg):
            raise SerializationError(f"{arg}: no such file")
        with open(arg, "r", encoding="utf-8") as f:
            text = f.read()
        source = arg
    try:
        return json.loads(text)
    except json.JSONDecodeError as e:
        raise SerializationError(f"{source}: invalid JSON at line {e.lineno} column {e.colno}: {e.msg}")


def canonical_json(doc: Any) -> str:
    return json.dumps(doc, sort_keys=True, separators=(",", ":"))


# Convenience aliases
encode_algebra = AlgebraCodec.encode
decode_algebra = AlgebraCodec.decode
encode_element = ElementCodec.encode
decode_element = ElementCodec.decode
encode_morphism = MorphismCodec.encode
decode_morphism = MorphismCodec.decode
encode_state = StateCodec.encode
decode_state = StateCodec.decode
encode_family = FamilyCodec.encode
decode_family = FamilyCodec.decode
encode_measure = MeasureCodec.encode
decode_measure = MeasureCodec.decode
encode_signature = SignatureCodec.encode
decode_signature = SignatureCodec.decode
encode_nullspace = NullspaceCodec.encode
