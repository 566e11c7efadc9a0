use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use anyhow::{Context, Result};
use prism_core::geometry::{
    compose_label_masks, epipolar_mask, grid_pose, mask_weight, refine_masks, visibility_masks, EpipolarConfig,
    RefineConfig, AZIMUTH_STEPS,
};
use prism_core::{BinaryMask, Camera, CameraPose, TriMesh};

use super::required_output;
use crate::cli::{GlobalArgs, MasksArgs};

fn save(mask: &BinaryMask, dir: &Path, name: &str) -> Result<()> {
    let path = dir.join(name);
    mask.save_pbm(&path)
        .with_context(|| format!("writing {}", path.display()))
}

fn pose_fields(tag: &str, p: &CameraPose) -> String {
    format!(
        "{tag}_az={} {tag}_el={} {tag}_r={}",
        p.azimuth_deg(),
        p.elevation_deg(),
        p.radius()
    )
}

/// Renders one source/target pair into `dir`.
fn render_pair(mesh: &TriMesh, src: &CameraPose, tgt: &CameraPose, a: &MasksArgs, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let src_cam = Camera::from_pose(src, a.size, a.fov);
    let tgt_cam = Camera::from_pose(tgt, a.size, a.fov);
    let vm = visibility_masks(mesh, &src_cam, &tgt_cam, a.min_pixels);
    let epi_cfg = EpipolarConfig {
        drop_target_occluded: !a.keep_occluded,
        ..EpipolarConfig::default()
    };
    let epi = epipolar_mask(mesh, &src_cam, &tgt_cam, &epi_cfg);
    let refine = RefineConfig::default();
    let (vis, invis) = if a.raw {
        (vm.visibility, vm.invisibility)
    } else {
        refine_masks(&vm.visibility, &vm.invisibility, &refine)?
    };

    save(&vis, dir, "visibility.pbm")?;
    save(&invis, dir, "invisibility.pbm")?;
    save(&epi, dir, "epipolar.pbm")?;
    save(&vm.silhouette, dir, "silhouette.pbm")?;

    let mut meta = format!(
        "{} {} size={} fov={} min_pixels={} refined={} refine_close={} refine_open={} epi_samples={} epi_close={} \
         epi_silhouette_radius={} keep_occluded={} silhouette={} visibility={} invisibility={} epipolar={}",
        pose_fields("src", src),
        pose_fields("tgt", tgt),
        a.size,
        a.fov,
        a.min_pixels,
        !a.raw,
        refine.close_radius,
        refine.open_radius,
        epi_cfg.samples,
        epi_cfg.close_radius,
        epi_cfg.silhouette_radius,
        a.keep_occluded,
        vm.silhouette.count(),
        vis.count(),
        invis.count(),
        epi.count(),
    );
    if a.compose {
        let (pos, neg) = compose_label_masks(&vis, &invis, &epi)?;
        save(&pos, dir, "positive.pbm")?;
        save(&neg, dir, "negative.pbm")?;
        let _ = write!(
            meta,
            " positive_weight={} negative_weight={}",
            mask_weight(&pos, &vm.silhouette)?,
            mask_weight(&neg, &vm.silhouette)?
        );
    }
    meta.push('\n');
    fs::write(dir.join("meta.txt"), meta)?;
    Ok(())
}

pub fn masks(g: &GlobalArgs, a: &MasksArgs) -> Result<()> {
    let out = required_output(g, "masks")?;
    let mesh = TriMesh::load_obj(&a.mesh).with_context(|| format!("loading {}", a.mesh.display()))?;
    if a.grid {
        let mut pairs = 0;
        for i in 0..AZIMUTH_STEPS {
            for j in (0..AZIMUTH_STEPS).filter(|&j| j != i) {
                let dir = out.join(format!("s{i:02}_t{j:02}"));
                render_pair(&mesh, &grid_pose(i)?, &grid_pose(j)?, a, &dir)
                    .with_context(|| format!("pair s{i:02}_t{j:02}"))?;
                pairs += 1;
            }
        }
        println!("wrote {pairs} pairs to {}", out.display());
    } else {
        let src = CameraPose::new(a.src_az, a.src_el, a.src_r)?;
        let tgt = CameraPose::new(a.tgt_az, a.tgt_el, a.tgt_r)?;
        render_pair(&mesh, &src, &tgt, a, out)?;
        println!("wrote masks to {}", out.display());
    }
    Ok(())
}
