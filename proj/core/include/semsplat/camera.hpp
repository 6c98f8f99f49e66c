#pragma once

#include <Eigen/Core>

namespace semsplat {

/// Pinhole camera, OpenCV axes (x right, y down, z forward).
struct Camera {
  double fx = 1.0;
  double fy = 1.0;
  double cx = 0.0;
  double cy = 0.0;
  int width = 0;
  int height = 0;
  Eigen::Matrix4d world_to_camera = Eigen::Matrix4d::Identity();
  double near = 0.01;
  double far = 100.0;

  /// Throws invalid-parameter when intrinsics, clip planes or the rotation
  /// block are out of contract.
  void validate() const;

  Eigen::Matrix3d rotation() const { return world_to_camera.topLeftCorner<3, 3>(); }
  Eigen::Vector3d translation() const { return world_to_camera.topRightCorner<3, 1>(); }
  Eigen::Vector3d center() const { return -rotation().transpose() * translation(); }
  Eigen::Matrix4d camera_to_world() const;

  static Camera from_camera_to_world(const Eigen::Matrix4d& camera_to_world, double fx,
                                     double fy, double cx, double cy, int width, int height);

  /// Camera at `eye` looking at `target`; `up` is world up (the camera's -y).
  static Camera look_at(const Eigen::Vector3d& eye, const Eigen::Vector3d& target,
                        const Eigen::Vector3d& up, double fx, double fy, int width, int height);
};

}  // namespace semsplat
