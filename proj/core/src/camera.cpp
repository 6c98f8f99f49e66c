#include "semsplat/camera.hpp"

#include <Eigen/Geometry>

#include <cmath>

#include "semsplat/error.hpp"

namespace semsplat {

void Camera::validate() const {
  if (!(fx > 0.0) || !(fy > 0.0)) throw_invalid("camera focal lengths must be positive");
  if (width <= 0 || height <= 0) throw_invalid("camera image size must be positive");
  if (!(near > 0.0) || !(near < far)) throw_invalid("camera requires 0 < near < far");
  if (!world_to_camera.allFinite()) throw_invalid("camera pose is not finite");
  const Eigen::Matrix3d r = rotation();
  if ((r * r.transpose() - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff() > 1e-6) {
    throw_invalid("camera rotation block is not orthonormal");
  }
  const Eigen::RowVector4d last = world_to_camera.row(3);
  if ((last - Eigen::RowVector4d(0, 0, 0, 1)).cwiseAbs().maxCoeff() > 1e-12) {
    throw_invalid("camera pose is not a rigid transform");
  }
}

Eigen::Matrix4d Camera::camera_to_world() const {
  Eigen::Matrix4d c2w = Eigen::Matrix4d::Identity();
  c2w.topLeftCorner<3, 3>() = rotation().transpose();
  c2w.topRightCorner<3, 1>() = center();
  return c2w;
}

Camera Camera::from_camera_to_world(const Eigen::Matrix4d& camera_to_world, double fx, double fy,
                                    double cx, double cy, int width, int height) {
  Camera cam;
  cam.fx = fx;
  cam.fy = fy;
  cam.cx = cx;
  cam.cy = cy;
  cam.width = width;
  cam.height = height;
  const Eigen::Matrix3d r = camera_to_world.topLeftCorner<3, 3>();
  const Eigen::Vector3d c = camera_to_world.topRightCorner<3, 1>();
  cam.world_to_camera.setIdentity();
  cam.world_to_camera.topLeftCorner<3, 3>() = r.transpose();
  cam.world_to_camera.topRightCorner<3, 1>() = -r.transpose() * c;
  return cam;
}

Camera Camera::look_at(const Eigen::Vector3d& eye, const Eigen::Vector3d& target,
                       const Eigen::Vector3d& up, double fx, double fy, int width, int height) {
  const Eigen::Vector3d forward = (target - eye).normalized();
  const Eigen::Vector3d right = forward.cross(up).normalized();
  const Eigen::Vector3d down = forward.cross(right);
  Eigen::Matrix4d c2w = Eigen::Matrix4d::Identity();
  c2w.block<3, 1>(0, 0) = right;
  c2w.block<3, 1>(0, 1) = down;
  c2w.block<3, 1>(0, 2) = forward;
  c2w.block<3, 1>(0, 3) = eye;
  return from_camera_to_world(c2w, fx, fy, 0.5 * width, 0.5 * height, width, height);
}

}  // namespace semsplat
