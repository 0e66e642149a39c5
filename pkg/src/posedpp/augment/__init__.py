from .heatmap import Heatmap, gaussian_heatmap, pose_heatmaps
from .image import ImageGrid, read_image, sample_bilinear, warp_image, warp_with, write_image
from .inpaint import inpaint_telea
from .pipeline import WarpResult, rotate_limbs, warp_augment
from .preprocess import basic_augment, square_box, square_crop
from .skeleton import (
    ANIMAL_POSE,
    Skeleton,
    limb_control_points,
    rotate_about,
    sample_limb_rotation,
    visible_limbs,
)
from .tps import ThinPlateTransform, tps_fit, tps_radial

__all__ = [
    "ANIMAL_POSE", "Heatmap", "ImageGrid", "Skeleton", "ThinPlateTransform", "WarpResult",
    "basic_augment", "gaussian_heatmap", "inpaint_telea", "limb_control_points",
    "pose_heatmaps", "read_image", "rotate_about", "rotate_limbs", "sample_bilinear",
    "sample_limb_rotation", "square_box", "square_crop", "tps_fit", "tps_radial",
    "visible_limbs", "warp_augment", "warp_image", "warp_with", "write_image",
]
