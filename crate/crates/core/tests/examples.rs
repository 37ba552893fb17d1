mod mappings_tour {
    include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/mappings_tour.rs"));
}

#[test]
fn mappings_tour_runs() {
    mappings_tour::run_example().expect("mappings tour example should run");
}

mod procrustes_derivative {
    include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/procrustes_derivative.rs"));
}

#[test]
fn procrustes_derivative_runs() {
    procrustes_derivative::run_example().expect("procrustes derivative example should run");
}

mod property_checks {
    include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/property_checks.rs"));
}

#[test]
fn property_checks_runs() {
    property_checks::run_example().expect("property checks example should run");
}

mod rotation_losses {
    include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/rotation_losses.rs"));
}

#[test]
fn rotation_losses_runs() {
    rotation_losses::run_example().expect("rotation losses example should run");
}

mod softmax_mapping {
    include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/softmax_mapping.rs"));
}

#[test]
fn softmax_mapping_runs() {
    softmax_mapping::run_example().expect("softmax mapping example should run");
}

mod train_regressor {
    include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/train_regressor.rs"));
}

#[test]
fn train_regressor_runs() {
    train_regressor::run_example().expect("train regressor example should run");
}

mod linearity {
    include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/linearity.rs"));
}

#[test]
fn linearity_runs() {
    linearity::run_example().expect("linearity example should run");
}

mod point_cloud_alignment {
    include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/point_cloud_alignment.rs"));
}

#[test]
fn point_cloud_alignment_runs() {
    point_cloud_alignment::run_example().expect("point cloud alignment example should run");
}

mod inverse_kinematics {
    include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/inverse_kinematics.rs"));
}

#[test]
fn inverse_kinematics_runs() {
    inverse_kinematics::run_example().expect("inverse kinematics example should run");
}

mod restricted_rotvec {
    include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/restricted_rotvec.rs"));
}

#[test]
fn restricted_rotvec_runs() {
    restricted_rotvec::run_example().expect("restricted rotvec example should run");
}

mod reports {
    include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/reports.rs"));
}

#[test]
fn reports_runs() {
    reports::run_example().expect("reports example should run");
}
