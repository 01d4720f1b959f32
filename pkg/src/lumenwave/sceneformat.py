"""Scene description format: nested key/value blocks.

A document is a sequence of blocks ``name { entry ... }``.  An entry is
``key value``, ``key { ... }`` (nested block) or ``key [ item ... ]``
(list of values or blocks).  Values are numbers, bare words, quoted
strings, node references ``@name`` and numeric tuples ``(a b c)``.
``#`` starts a comment.  All parse and validation errors carry
line/column positions.

Block types: ``camera mesh instance material emitter environment volume
backplate decal``.  See README for the full schema.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field

import numpy as np

from lumenwave import imagefiles

__all__ = ["SceneError", "Scene", "load_scene", "load_scene_file"]


class SceneError(Exception):
    """Parse or validation failure with source position."""

    def __init__(self, message, line=None, col=None):
        if line is not None:
            message = f"line {line}, column {col}: {message}"
        super().__init__(message)
        self.line = line
        self.col = col


# ---------------------------------------------------------------------------
# Tokenizer / parser
# ---------------------------------------------------------------------------

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>[\s,]+)
  | (?P<comment>\#[^\n]*)
  | (?P<number>[-+]?(\d+\.?\d*|\.\d+)([eE][-+]?\d+)?)
  | (?P<string>"[^"]*")
  | (?P<ref>@[A-Za-z_][\w.-]*)
  | (?P<word>[A-Za-z_][\w.-]*)
  | (?P<punct>[{}\[\]()])
""",
    re.VERBOSE,
)


@dataclass
class _Token:
    kind: str
    value: object
    line: int
    col: int


def _tokenize(text):
    tokens = []
    line = 1
    line_start = 0
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if not m:
            col = pos - line_start + 1
            raise SceneError(f"unexpected character {text[pos]!r}", line, col)
        kind = m.lastgroup
        value = m.group()
        col = pos - line_start + 1
        if kind == "ws" or kind == "comment":
            newlines = value.count("\n")
            if newlines:
                line += newlines
                line_start = pos + value.rindex("\n") + 1
        elif kind == "number":
            tokens.append(_Token("number", float(value), line, col))
        elif kind == "string":
            tokens.append(_Token("string", value[1:-1], line, col))
        elif kind == "ref":
            tokens.append(_Token("ref", value[1:], line, col))
        elif kind == "word":
            tokens.append(_Token("word", value, line, col))
        else:
            tokens.append(_Token(value, value, line, col))
        pos = m.end()
    tokens.append(_Token("eof", None, line, len(text) - line_start + 1))
    return tokens


@dataclass
class Block:
    """Parsed block: ordered (key, value) pairs plus source position."""

    name: str
    entries: list
    line: int
    col: int

    def get(self, key, default=None):
        for k, v, _tok in self.entries:
            if k == key:
                return v
        return default

    def get_all(self, key):
        return [v for k, v, _tok in self.entries if k == key]

    def token(self, key):
        for k, _v, tok in self.entries:
            if k == key:
                return tok
        return None

    def require(self, key):
        value = self.get(key)
        if value is None:
            raise SceneError(f"{self.name}: missing required key '{key}'", self.line, self.col)
        return value


class _Parser:
    def __init__(self, text):
        self.tokens = _tokenize(text)
        self.pos = 0

    def peek(self):
        return self.tokens[self.pos]

    def next(self):
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def expect(self, kind):
        tok = self.next()
        if tok.kind != kind:
            raise SceneError(f"expected {kind!r}, found {tok.value!r}", tok.line, tok.col)
        return tok

    def parse_document(self):
        blocks = []
        while self.peek().kind != "eof":
            tok = self.expect("word")
            blocks.append(self.parse_block(tok))
        return blocks

    def parse_block(self, name_tok):
        open_tok = self.expect("{")
        entries = []
        while True:
            tok = self.peek()
            if tok.kind == "}":
                self.next()
                return Block(name_tok.value, entries, name_tok.line, name_tok.col)
            if tok.kind == "eof":
                raise SceneError(f"unclosed block '{name_tok.value}'", open_tok.line, open_tok.col)
            key = self.expect("word")
            entries.append((key.value, self.parse_value(key), key))

    def parse_value(self, key_tok):
        tok = self.peek()
        if tok.kind in ("number", "string", "word", "ref"):
            self.next()
            if tok.kind == "ref":
                return NodeRef(tok.value)
            return tok.value
        if tok.kind == "(":
            return self.parse_tuple()
        if tok.kind == "[":
            return self.parse_list()
        if tok.kind == "{":
            return self.parse_block(key_tok)
        raise SceneError(f"expected a value after '{key_tok.value}'", tok.line, tok.col)

    def parse_tuple(self):
        self.expect("(")
        items = []
        while True:
            tok = self.peek()
            if tok.kind == ")":
                self.next()
                return tuple(items)
            if tok.kind != "number":
                raise SceneError("tuples may only contain numbers", tok.line, tok.col)
            items.append(self.next().value)

    def parse_list(self):
        self.expect("[")
        items = []
        while True:
            tok = self.peek()
            if tok.kind == "]":
                self.next()
                return items
            if tok.kind == "eof":
                raise SceneError("unclosed list", tok.line, tok.col)
            if tok.kind == "{":
                items.append(self.parse_block(tok))
            elif tok.kind in ("number", "string", "word"):
                items.append(self.next().value)
            elif tok.kind == "(":
                items.append(self.parse_tuple())
            else:
                raise SceneError(f"unexpected {tok.value!r} in list", tok.line, tok.col)


@dataclass(frozen=True)
class NodeRef:
    name: str


# ---------------------------------------------------------------------------
# Scene model
# ---------------------------------------------------------------------------

BSDF_KINDS = ("diffuse", "glossy", "specular_reflect", "specular_transmit")
NODE_KINDS = ("constant", "texture", "checker", "mix", "multiply")
MAX_LAYERS = 4


@dataclass
class TextureNode:
    kind: str
    value: tuple = (0.0, 0.0, 0.0)
    operands: tuple = ()  # node indices
    params: tuple = ()
    image: np.ndarray | None = None


@dataclass
class Layer:
    bsdf: str
    tint: int  # node index
    weight: int
    roughness: int = -1
    coat: bool = False
    bump: int = -1
    bump_strength: float = 1.0


@dataclass
class Material:
    name: str
    layers: list
    nodes: list  # TextureNode graph local to the material
    cutout: int = -1
    emission: int = -1
    emission_scale: float = 1.0
    ior: float = 1.5
    abbe: float = 0.0  # 0 disables dispersion
    thin_walled: bool = False
    sigma_a: tuple = (0.0, 0.0, 0.0)
    sigma_s: tuple = (0.0, 0.0, 0.0)
    has_medium: bool = False


@dataclass
class Mesh:
    name: str
    positions: np.ndarray
    normals: np.ndarray
    uvw: np.ndarray
    triangles: np.ndarray


@dataclass
class Instance:
    name: str
    mesh: int
    material: int
    transform: np.ndarray  # 3x4 affine
    transform_t1: np.ndarray | None = None
    matte: bool = False
    matte_shadow_intensity: float = 1.0
    visible: bool = True


@dataclass
class Emitter:
    instance: int
    triangles: np.ndarray | None  # local triangle ids, None = all
    radiance_node: int  # node id in the instance material's graph, or -1
    radiance: tuple = (1.0, 1.0, 1.0)
    scale: float = 1.0
    flux: float | None = None
    twosided: bool = False


@dataclass
class DomeConfig:
    kind: str = "infinite"  # infinite | sphere | box | ground
    radius: float = 100.0
    center: tuple = (0.0, 0.0, 0.0)
    height: float = 0.0  # ground plane height for the ground variant


@dataclass
class Environment:
    image: np.ndarray | None = None  # lat-long radiance
    constant: tuple | None = None
    scale: float = 1.0
    dome: DomeConfig = field(default_factory=DomeConfig)


@dataclass
class Projector:
    kind: str = "none"  # none | planar | cylindrical
    origin: tuple = (0.0, 0.0, 0.0)
    axis_u: tuple = (1.0, 0.0, 0.0)
    axis_v: tuple = (0.0, 1.0, 0.0)
    axis: tuple = (0.0, 0.0, 1.0)


@dataclass
class Decal:
    name: str
    material: int
    priority: int
    projector: Projector
    clip_min: tuple
    clip_max: tuple
    targets: list  # instance indices
    side: str = "front"  # front | back | both


@dataclass
class Camera:
    position: np.ndarray
    forward: np.ndarray
    up: np.ndarray
    right: np.ndarray
    fov_y: float  # degrees
    shutter: tuple = (0.0, 0.0)


@dataclass
class Scene:
    camera: Camera
    meshes: list
    instances: list
    materials: list
    emitters: list
    environment: Environment
    decals: list
    backplate: np.ndarray | None = None
    material_index: dict = field(default_factory=dict)
    instance_index: dict = field(default_factory=dict)

    @property
    def has_motion(self) -> bool:
        return any(inst.transform_t1 is not None for inst in self.instances)


# ---------------------------------------------------------------------------
# Interpretation
# ---------------------------------------------------------------------------


def _as_vec3(value, block, key):
    if isinstance(value, (int, float)):
        value = (value, value, value)
    if not (isinstance(value, tuple) and len(value) == 3):
        raise SceneError(f"{block.name}.{key}: expected a 3-tuple", block.line, block.col)
    if not all(math.isfinite(v) for v in value):
        raise SceneError(f"{block.name}.{key}: non-finite component", block.line, block.col)
    return tuple(float(v) for v in value)


def _as_float(value, block, key):
    if not isinstance(value, (int, float)) or not math.isfinite(float(value)):
        raise SceneError(f"{block.name}.{key}: expected a finite number", block.line, block.col)
    return float(value)


def _compose_transform(block) -> np.ndarray:
    """Compose listed transform ops (or a raw 12-number matrix) into 3x4."""
    m = np.eye(4)
    for key, value, tok in block.entries:
        t = np.eye(4)
        if key == "matrix":
            if len(value) != 12:
                raise SceneError("matrix needs 12 numbers (row-major 3x4)", tok.line, tok.col)
            t[:3, :] = np.asarray(value, dtype=np.float64).reshape(3, 4)
        elif key == "translate":
            t[:3, 3] = _as_vec3(value, block, key)
        elif key == "scale":
            t[:3, :3] = np.diag(_as_vec3(value, block, key))
        elif key in ("rotate_x", "rotate_y", "rotate_z"):
            ang = math.radians(_as_float(value, block, key))
            c, s = math.cos(ang), math.sin(ang)
            axis = "xyz".index(key[-1])
            i, j = (axis + 1) % 3, (axis + 2) % 3
            t[i, i] = c
            t[i, j] = -s
            t[j, i] = s
            t[j, j] = c
        else:
            raise SceneError(f"unknown transform op '{key}'", tok.line, tok.col)
        m = m @ t
    return m[:3, :]


def _numbers(value, block, key, count_multiple=1):
    if not isinstance(value, list) or any(not isinstance(v, (int, float)) for v in value):
        raise SceneError(f"{block.name}.{key}: expected a number list", block.line, block.col)
    arr = np.asarray(value, dtype=np.float64)
    if not np.all(np.isfinite(arr)):
        raise SceneError(f"{block.name}.{key}: non-finite entry", block.line, block.col)
    if len(arr) % count_multiple:
        raise SceneError(
            f"{block.name}.{key}: length must be a multiple of {count_multiple}", block.line, block.col
        )
    return arr


class _SceneBuilder:
    def __init__(self, blocks, base_dir=None):
        self.blocks = blocks
        self.base_dir = base_dir
        self.meshes = []
        self.mesh_index = {}
        self.materials = []
        self.material_index = {}
        self.instances = []
        self.instance_index = {}
        self.emitters = []
        self.decals = []
        self.environment = Environment()
        self.backplate = None
        self.camera = None

    def image(self, value, block, key):
        if isinstance(value, tuple):
            return np.asarray([[list(_as_vec3(value, block, key))]], dtype=np.float64)
        if not isinstance(value, str):
            raise SceneError(f"{block.name}.{key}: expected an image path or constant", block.line, block.col)
        path = value
        if self.base_dir is not None:
            import os

            if not os.path.isabs(path):
                path = os.path.join(self.base_dir, path)
        try:
            return imagefiles.read_image(path)
        except FileNotFoundError:
            raise SceneError(f"{block.name}.{key}: image file not found: {value}", block.line, block.col)

    def build(self) -> Scene:
        order = {"mesh": 0, "material": 1, "volume": 2, "instance": 3, "emitter": 4,
                 "decal": 5, "camera": 6, "environment": 7, "backplate": 8}
        unknown = [b for b in self.blocks if b.name not in order]
        if unknown:
            b = unknown[0]
            raise SceneError(f"unknown block type '{b.name}'", b.line, b.col)
        for b in sorted(self.blocks, key=lambda b: order[b.name]):
            getattr(self, "block_" + b.name)(b)
        if self.camera is None:
            raise SceneError("scene has no camera block")
        scene = Scene(
            camera=self.camera,
            meshes=self.meshes,
            instances=self.instances,
            materials=self.materials,
            emitters=self.emitters,
            environment=self.environment,
            decals=self.decals,
            backplate=self.backplate,
            material_index=self.material_index,
            instance_index=self.instance_index,
        )
        return scene

    def block_mesh(self, b):
        name = str(b.require("id"))
        if name in self.mesh_index:
            raise SceneError(f"duplicate mesh id '{name}'", b.line, b.col)
        positions = _numbers(b.require("positions"), b, "positions", 3).reshape(-1, 3)
        tris = _numbers(b.require("triangles"), b, "triangles", 3).astype(np.int64).reshape(-1, 3)
        if tris.min(initial=0) < 0 or tris.max(initial=-1) >= len(positions):
            raise SceneError(f"mesh '{name}': triangle vertex index out of range", b.line, b.col)
        normals = b.get("normals")
        if normals is not None:
            normals = _numbers(normals, b, "normals", 3).reshape(-1, 3)
            if normals.shape != positions.shape:
                raise SceneError(f"mesh '{name}': normals count mismatch", b.line, b.col)
            lens = np.linalg.norm(normals, axis=1)
            if np.any(lens <= 0):
                raise SceneError(f"mesh '{name}': zero-length normal", b.line, b.col)
            normals = normals / lens[:, None]
        else:
            normals = _vertex_normals(positions, tris)
        uvw = b.get("uvw")
        if uvw is not None:
            uvw = _numbers(uvw, b, "uvw", 3).reshape(-1, 3)
            if uvw.shape != positions.shape:
                raise SceneError(f"mesh '{name}': uvw count mismatch", b.line, b.col)
        else:
            uvw = np.zeros_like(positions)
        self.mesh_index[name] = len(self.meshes)
        self.meshes.append(Mesh(name, positions, normals, uvw, tris))

    def block_material(self, b):
        name = str(b.require("id"))
        if name in self.material_index:
            raise SceneError(f"duplicate material id '{name}'", b.line, b.col)
        nodes = []
        node_names = {}

        def input_node(value, key) -> int:
            # inline constant / texture path / @ref / nested node block
            if isinstance(value, NodeRef):
                if value.name not in node_names:
                    raise SceneError(f"material '{name}': unknown node '@{value.name}'", b.line, b.col)
                return node_names[value.name]
            if isinstance(value, tuple) or isinstance(value, (int, float)):
                nodes.append(TextureNode("constant", value=_as_vec3(value, b, key)))
                return len(nodes) - 1
            if isinstance(value, str):
                nodes.append(TextureNode("texture", image=self.image(value, b, key)))
                return len(nodes) - 1
            if isinstance(value, Block):
                return build_node(value)
            raise SceneError(f"material '{name}': bad input for '{key}'", b.line, b.col)

        def build_node(nb: Block) -> int:
            kind = str(nb.require("kind")) if nb.get("kind") is not None else nb.name
            if kind not in NODE_KINDS:
                raise SceneError(f"unknown texturing node kind '{kind}'", nb.line, nb.col)
            operands = []
            params = []
            value = (0.0, 0.0, 0.0)
            image = None
            if kind == "constant":
                value = _as_vec3(nb.require("value"), nb, "value")
            elif kind == "texture":
                image = self.image(nb.require("image"), nb, "image")
            elif kind == "checker":
                operands.append(input_node(nb.get("a", (1.0, 1.0, 1.0)), "a"))
                operands.append(input_node(nb.get("b", (0.0, 0.0, 0.0)), "b"))
                params.append(_as_float(nb.get("scale", 1.0), nb, "scale"))
            elif kind == "mix":
                operands.append(input_node(nb.require("a"), "a"))
                operands.append(input_node(nb.require("b"), "b"))
                params.append(_as_float(nb.get("t", 0.5), nb, "t"))
            elif kind == "multiply":
                operands.append(input_node(nb.require("a"), "a"))
                operands.append(input_node(nb.require("b"), "b"))
            nodes.append(TextureNode(kind, value=value, operands=tuple(operands), params=tuple(params), image=image))
            idx = len(nodes) - 1
            node_id = nb.get("id")
            if node_id is not None:
                node_names[str(node_id)] = idx
            return idx

        for nb in b.get("nodes", []) or []:
            if not isinstance(nb, Block):
                raise SceneError(f"material '{name}': nodes list must contain blocks", b.line, b.col)
            build_node(nb)

        layers = []
        for lb in b.get("layers", []) or []:
            if not isinstance(lb, Block):
                raise SceneError(f"material '{name}': layers list must contain blocks", b.line, b.col)
            bsdf = str(lb.require("bsdf"))
            if bsdf not in BSDF_KINDS:
                raise SceneError(f"material '{name}': unknown bsdf '{bsdf}'", lb.line, lb.col)
            tint = input_node(lb.get("tint", (1.0, 1.0, 1.0)), "tint")
            weight = input_node(lb.get("weight", 1.0), "weight")
            roughness = -1
            if bsdf == "glossy":
                roughness = input_node(lb.get("roughness", 0.2), "roughness")
            bump = -1
            if lb.get("bump") is not None:
                bump = input_node(lb.get("bump"), "bump")
            layers.append(
                Layer(
                    bsdf=bsdf,
                    tint=tint,
                    weight=weight,
                    roughness=roughness,
                    coat=bool(lb.get("coat", False)),
                    bump=bump,
                    bump_strength=_as_float(lb.get("bump_strength", 1.0), lb, "bump_strength"),
                )
            )
        if len(layers) > MAX_LAYERS:
            raise SceneError(f"material '{name}': at most {MAX_LAYERS} layers supported", b.line, b.col)

        cutout = -1
        if b.get("cutout") is not None:
            cutout = input_node(b.get("cutout"), "cutout")
        emission = -1
        emission_scale = 1.0
        eb = b.get("emission")
        if eb is not None:
            if isinstance(eb, Block):
                emission = input_node(eb.require("radiance"), "radiance")
                emission_scale = _as_float(eb.get("scale", 1.0), eb, "scale")
            else:
                emission = input_node(eb, "emission")
        mat = Material(
            name=name,
            layers=layers,
            nodes=nodes,
            cutout=cutout,
            emission=emission,
            emission_scale=emission_scale,
            ior=_as_float(b.get("ior", 1.5), b, "ior"),
            abbe=_as_float(b.get("abbe", 0.0), b, "abbe"),
            thin_walled=bool(b.get("thin_walled", False)),
        )
        if mat.ior <= 0:
            raise SceneError(f"material '{name}': ior must be positive", b.line, b.col)
        self.material_index[name] = len(self.materials)
        self.materials.append(mat)

    def block_volume(self, b):
        name = str(b.require("material"))
        if name not in self.material_index:
            raise SceneError(f"volume: unknown material '{name}'", b.line, b.col)
        mat = self.materials[self.material_index[name]]
        mat.sigma_a = _as_vec3(b.get("sigma_a", (0.0, 0.0, 0.0)), b, "sigma_a")
        mat.sigma_s = _as_vec3(b.get("sigma_s", (0.0, 0.0, 0.0)), b, "sigma_s")
        if any(v < 0 for v in mat.sigma_a + mat.sigma_s):
            raise SceneError("volume coefficients must be non-negative", b.line, b.col)
        if b.get("ior") is not None:
            mat.ior = _as_float(b.get("ior"), b, "ior")
        mat.has_medium = True

    def block_instance(self, b):
        name = str(b.get("id", f"instance{len(self.instances)}"))
        if name in self.instance_index:
            raise SceneError(f"duplicate instance id '{name}'", b.line, b.col)
        mesh_name = str(b.require("mesh"))
        if mesh_name not in self.mesh_index:
            raise SceneError(f"instance '{name}': unknown mesh '{mesh_name}'", b.line, b.col)
        mat_name = str(b.require("material"))
        if mat_name not in self.material_index:
            raise SceneError(f"instance '{name}': unknown material '{mat_name}'", b.line, b.col)
        tf = b.get("transform")
        transform = _compose_transform(tf) if isinstance(tf, Block) else np.eye(4)[:3, :]
        if isinstance(tf, tuple):
            if len(tf) != 12:
                raise SceneError(f"instance '{name}': transform tuple needs 12 numbers", b.line, b.col)
            transform = np.asarray(tf, dtype=np.float64).reshape(3, 4)
        tf1 = b.get("transform_t1")
        transform_t1 = None
        if tf1 is not None:
            transform_t1 = _compose_transform(tf1) if isinstance(tf1, Block) else np.asarray(tf1, dtype=np.float64).reshape(3, 4)
        self.instance_index[name] = len(self.instances)
        self.instances.append(
            Instance(
                name=name,
                mesh=self.mesh_index[mesh_name],
                material=self.material_index[mat_name],
                transform=transform,
                transform_t1=transform_t1,
                matte=bool(b.get("matte", False)),
                matte_shadow_intensity=_as_float(b.get("shadow_intensity", 1.0), b, "shadow_intensity"),
            )
        )

    def block_emitter(self, b):
        inst_name = str(b.require("instance"))
        if inst_name not in self.instance_index:
            raise SceneError(f"emitter: unknown instance '{inst_name}'", b.line, b.col)
        inst_id = self.instance_index[inst_name]
        tris = b.get("triangles")
        tri_arr = None
        if tris is not None and tris != "all":
            tri_arr = _numbers(tris, b, "triangles").astype(np.int64)
            mesh = self.meshes[self.instances[inst_id].mesh]
            if tri_arr.min(initial=0) < 0 or tri_arr.max(initial=-1) >= len(mesh.triangles):
                raise SceneError(f"emitter: triangle id out of range for '{inst_name}'", b.line, b.col)
        radiance = b.get("radiance")
        flux = b.get("flux")
        if radiance is None and flux is None:
            radiance = (1.0, 1.0, 1.0)
        self.emitters.append(
            Emitter(
                instance=inst_id,
                triangles=tri_arr,
                radiance_node=-1,
                radiance=_as_vec3(radiance, b, "radiance") if radiance is not None else (1.0, 1.0, 1.0),
                scale=_as_float(b.get("scale", 1.0), b, "scale"),
                flux=_as_float(flux, b, "flux") if flux is not None else None,
                twosided=bool(b.get("twosided", False)),
            )
        )
        # textured emission: route through the instance material's node graph
        tex = b.get("texture")
        if tex is not None:
            mat = self.materials[self.instances[inst_id].material]
            mat.nodes.append(TextureNode("texture", image=self.image(tex, b, "texture")))
            self.emitters[-1].radiance_node = len(mat.nodes) - 1

    def block_environment(self, b):
        env = Environment()
        if b.get("image") is not None:
            env.image = self.image(b.get("image"), b, "image")
        if b.get("constant") is not None:
            env.constant = _as_vec3(b.get("constant"), b, "constant")
        if env.image is None and env.constant is None:
            raise SceneError("environment needs 'image' or 'constant'", b.line, b.col)
        env.scale = _as_float(b.get("scale", 1.0), b, "scale")
        db = b.get("dome")
        if isinstance(db, Block):
            kind = str(db.get("type", "infinite"))
            if kind not in ("infinite", "sphere", "box", "ground"):
                raise SceneError(f"unknown dome type '{kind}'", db.line, db.col)
            env.dome = DomeConfig(
                kind=kind,
                radius=_as_float(db.get("radius", 100.0), db, "radius"),
                center=_as_vec3(db.get("center", (0.0, 0.0, 0.0)), db, "center"),
                height=_as_float(db.get("height", 0.0), db, "height"),
            )
            if env.dome.radius <= 0 and kind != "infinite":
                raise SceneError("dome radius must be positive", db.line, db.col)
        self.environment = env

    def block_backplate(self, b):
        self.backplate = self.image(b.require("image"), b, "image")

    def block_decal(self, b):
        name = str(b.require("id"))
        mat_name = str(b.require("material"))
        if mat_name not in self.material_index:
            raise SceneError(f"decal '{name}': unknown material '{mat_name}'", b.line, b.col)
        proj = Projector()
        pb = b.get("projector")
        if isinstance(pb, Block):
            kind = str(pb.get("type", "none"))
            if kind not in ("none", "planar", "cylindrical"):
                raise SceneError(f"decal '{name}': unknown projector '{kind}'", pb.line, pb.col)
            proj = Projector(
                kind=kind,
                origin=_as_vec3(pb.get("origin", (0.0, 0.0, 0.0)), pb, "origin"),
                axis_u=_as_vec3(pb.get("axis_u", (1.0, 0.0, 0.0)), pb, "axis_u"),
                axis_v=_as_vec3(pb.get("axis_v", (0.0, 1.0, 0.0)), pb, "axis_v"),
                axis=_as_vec3(pb.get("axis", (0.0, 0.0, 1.0)), pb, "axis"),
            )
        cb = b.get("clipbox")
        clip_min = (-np.inf, -np.inf, -np.inf)
        clip_max = (np.inf, np.inf, np.inf)
        if isinstance(cb, Block):
            clip_min = _as_vec3(cb.require("min"), cb, "min")
            clip_max = _as_vec3(cb.require("max"), cb, "max")
        targets = []
        for t in b.get("targets", []) or []:
            if str(t) not in self.instance_index:
                raise SceneError(f"decal '{name}': unknown target instance '{t}'", b.line, b.col)
            targets.append(self.instance_index[str(t)])
        side = str(b.get("side", "front"))
        if side not in ("front", "back", "both"):
            raise SceneError(f"decal '{name}': side must be front|back|both", b.line, b.col)
        self.decals.append(
            Decal(
                name=name,
                material=self.material_index[mat_name],
                priority=int(b.get("priority", 0)),
                projector=proj,
                clip_min=clip_min,
                clip_max=clip_max,
                targets=targets,
                side=side,
            )
        )

    def block_camera(self, b):
        position = np.asarray(_as_vec3(b.require("position"), b, "position"))
        look_at = np.asarray(_as_vec3(b.get("look_at", (0.0, 0.0, 0.0)), b, "look_at"))
        up_hint = np.asarray(_as_vec3(b.get("up", (0.0, 1.0, 0.0)), b, "up"))
        forward = look_at - position
        norm = np.linalg.norm(forward)
        if norm == 0:
            raise SceneError("camera position equals look_at", b.line, b.col)
        forward = forward / norm
        right = np.cross(forward, up_hint)
        rn = np.linalg.norm(right)
        if rn == 0:
            raise SceneError("camera up is parallel to the view direction", b.line, b.col)
        right = right / rn
        up = np.cross(right, forward)
        fov = _as_float(b.get("fov_y", 45.0), b, "fov_y")
        if not 0 < fov < 180:
            raise SceneError("fov_y must be in (0, 180)", b.line, b.col)
        shutter = b.get("shutter", (0.0, 0.0))
        if isinstance(shutter, tuple) and len(shutter) == 2:
            t0, t1 = float(shutter[0]), float(shutter[1])
        else:
            raise SceneError("shutter expects (open, close)", b.line, b.col)
        if t1 < t0:
            raise SceneError("shutter interval has negative length", b.line, b.col)
        self.camera = Camera(position=position, forward=forward, up=up, right=right, fov_y=fov, shutter=(t0, t1))


def _vertex_normals(positions, triangles):
    normals = np.zeros_like(positions)
    p = positions
    t = triangles
    fn = np.cross(p[t[:, 1]] - p[t[:, 0]], p[t[:, 2]] - p[t[:, 0]])
    for k in range(3):
        np.add.at(normals, t[:, k], fn)
    lens = np.linalg.norm(normals, axis=1)
    lens[lens == 0] = 1.0
    return normals / lens[:, None]


def load_scene(text: str, base_dir=None) -> Scene:
    """Parse and validate a scene document."""
    blocks = _Parser(text).parse_document()
    return _SceneBuilder(blocks, base_dir).build()


def load_scene_file(path) -> Scene:
    import os

    with open(path, "r", encoding="utf-8") as f:
        text = f.read()
    return load_scene(text, base_dir=os.path.dirname(os.path.abspath(path)))
