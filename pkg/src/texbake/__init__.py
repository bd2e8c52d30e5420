"""texbake: progressive UV texture baking for untextured triangle meshes.

The pipeline renders depth from a small set of automatically selected views,
asks a pluggable depth-aware inpainting generator for each view's appearance,
filters out low-confidence pixels, and bilinearly splats the rest into the UV
texture.
"""

from .backproject import UvTexture, commit, splat, uv_coverage, uv_fill
from .camera import CameraPose, fibonacci_lattice, front_back_pair, view_label
from .generator import (
    Generator,
    GeneratorRequest,
    GeneratorResponse,
    HttpGenerator,
    parse_generator_uri,
)
from .mesh import TriMesh, load_mesh, normalize, save_mesh
from .pipeline import PipelineConfig, StageRecord, enhance_texture, texture_mesh
from .raster import rasterize, render_depth, render_rgb

__version__ = "0.1.0"

__all__ = [
    "CameraPose",
    "Generator",
    "GeneratorRequest",
    "GeneratorResponse",
    "HttpGenerator",
    "PipelineConfig",
    "StageRecord",
    "TriMesh",
    "UvTexture",
    "commit",
    "enhance_texture",
    "fibonacci_lattice",
    "front_back_pair",
    "load_mesh",
    "normalize",
    "parse_generator_uri",
    "rasterize",
    "render_depth",
    "render_rgb",
    "save_mesh",
    "splat",
    "texture_mesh",
    "uv_coverage",
    "uv_fill",
    "view_label",
]
