//! Road network and waypoint mobility.
//!
//! Routes are polylines; closed routes loop, open routes park the vehicle at
//! the final waypoint. Generators provide the two stock layouts (grid and
//! alternate-route) plus rectangle loops used by the built-in scenarios.

use crate::geom::Vec2;
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Route {
    pub name: String,
    pub waypoints: Vec<Vec2>,
    /// Closed routes wrap around; open routes end parked at the last point.
    pub closed: bool,
}

impl Route {
    pub fn length(&self) -> f64 {
        if self.waypoints.len() < 2 {
            return 0.0;
        }
        let mut len: f64 = self
            .waypoints
            .windows(2)
            .map(|w| w[0].distance(w[1]))
            .sum();
        if self.closed {
            len += self.waypoints[self.waypoints.len() - 1].distance(self.waypoints[0]);
        }
        len
    }

    /// Position at `dist` metres along the route from its first waypoint.
    /// Closed routes wrap; open routes clamp to the final waypoint.
    pub fn point_at(&self, dist: f64) -> Vec2 {
        if self.waypoints.len() == 1 {
            return self.waypoints[0];
        }
        let total = self.length();
        let mut d = if self.closed {
            if total > 0.0 {
                dist.rem_euclid(total)
            } else {
                0.0
            }
        } else {
            dist.clamp(0.0, total)
        };
        let n = self.waypoints.len();
        let seg_count = if self.closed { n } else { n - 1 };
        for i in 0..seg_count {
            let a = self.waypoints[i];
            let b = self.waypoints[(i + 1) % n];
            let seg = a.distance(b);
            if d <= seg || i == seg_count - 1 {
                if seg == 0.0 {
                    return a;
                }
                return a.lerp(b, (d / seg).min(1.0));
            }
            d -= seg;
        }
        self.waypoints[0]
    }
}

/// A vehicle's progress along a route.
#[derive(Clone, Debug, PartialEq)]
pub struct RouteCursor {
    pub route: usize,
    pub dist_m: f64,
}

impl RouteCursor {
    /// Advances by `speed * dt` and returns the new position. Open routes
    /// stop at their end (parked).
    pub fn advance(&mut self, routes: &[Route], speed_mps: f64, dt_s: f64) -> Vec2 {
        let route = &routes[self.route];
        let total = route.length();
        self.dist_m += speed_mps * dt_s;
        if route.closed {
            if total > 0.0 {
                self.dist_m = self.dist_m.rem_euclid(total);
            }
        } else if self.dist_m > total {
            self.dist_m = total;
        }
        route.point_at(self.dist_m)
    }
}

/// An axis-aligned rectangular loop, travelled counterclockwise from the
/// south-west corner.
pub fn rectangle_loop(name: &str, center: Vec2, width: f64, height: f64) -> Route {
    let hw = width / 2.0;
    let hh = height / 2.0;
    Route {
        name: name.to_string(),
        waypoints: vec![
            Vec2::new(center.x - hw, center.y - hh),
            Vec2::new(center.x + hw, center.y - hh),
            Vec2::new(center.x + hw, center.y + hh),
            Vec2::new(center.x - hw, center.y + hh),
        ],
        closed: true,
    }
}

/// Manhattan grid: returns the perimeter loop plus one serpentine route that
/// sweeps every horizontal street.
pub fn grid(origin: Vec2, cols: usize, rows: usize, spacing: f64) -> Vec<Route> {
    assert!(cols >= 2 && rows >= 2, "grid needs at least 2x2 nodes");
    let node = |c: usize, r: usize| {
        Vec2::new(origin.x + c as f64 * spacing, origin.y + r as f64 * spacing)
    };
    let perimeter = Route {
        name: "grid_perimeter".to_string(),
        waypoints: vec![
            node(0, 0),
            node(cols - 1, 0),
            node(cols - 1, rows - 1),
            node(0, rows - 1),
        ],
        closed: true,
    };
    let mut serp = Vec::new();
    for r in 0..rows {
        if r % 2 == 0 {
            serp.push(node(0, r));
            serp.push(node(cols - 1, r));
        } else {
            serp.push(node(cols - 1, r));
            serp.push(node(0, r));
        }
    }
    let serpentine = Route {
        name: "grid_serpentine".to_string(),
        waypoints: serp,
        closed: false,
    };
    vec![perimeter, serpentine]
}

/// Two alternate paths between a shared start and end: a direct route and a
/// detour displaced sideways by `offset`.
pub fn alternate_route(start: Vec2, end: Vec2, offset: f64) -> Vec<Route> {
    let mid = start.lerp(end, 0.5);
    let dx = end.x - start.x;
    let dy = end.y - start.y;
    let len = (dx * dx + dy * dy).sqrt().max(1e-9);
    let normal = Vec2::new(-dy / len, dx / len);
    let detour = Vec2::new(mid.x + normal.x * offset, mid.y + normal.y * offset);
    vec![
        Route {
            name: "alt_direct".to_string(),
            waypoints: vec![start, end],
            closed: false,
        },
        Route {
            name: "alt_detour".to_string(),
            waypoints: vec![start, detour, end],
            closed: false,
        },
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn straight_route_advance() {
        let routes = vec![Route {
            name: "r".into(),
            waypoints: vec![Vec2::new(0.0, 0.0), Vec2::new(100.0, 0.0)],
            closed: false,
        }];
        let mut c = RouteCursor { route: 0, dist_m: 0.0 };
        // 20 m/s for 1 s moves exactly 20 m.
        let p = c.advance(&routes, 20.0, 1.0);
        assert_eq!(p, Vec2::new(20.0, 0.0));
    }

    #[test]
    fn open_route_parks_at_end() {
        let routes = vec![Route {
            name: "r".into(),
            waypoints: vec![Vec2::new(0.0, 0.0), Vec2::new(30.0, 0.0)],
            closed: false,
        }];
        let mut c = RouteCursor { route: 0, dist_m: 0.0 };
        for _ in 0..10 {
            c.advance(&routes, 20.0, 1.0);
        }
        assert_eq!(c.advance(&routes, 20.0, 1.0), Vec2::new(30.0, 0.0));
    }

    #[test]
    fn closed_route_wraps() {
        let loop_r = rectangle_loop("loop", Vec2::new(0.0, 0.0), 100.0, 100.0);
        assert_eq!(loop_r.length(), 400.0);
        let routes = vec![loop_r];
        let mut c = RouteCursor { route: 0, dist_m: 390.0 };
        let p = c.advance(&routes, 20.0, 1.0);
        // 390 + 20 = 410 -> wraps to 10 m along the first (southern) edge.
        assert_eq!(p, Vec2::new(-40.0, -50.0));
    }

    #[test]
    fn point_at_walks_segments() {
        let r = rectangle_loop("loop", Vec2::new(50.0, 50.0), 100.0, 100.0);
        assert_eq!(r.point_at(0.0), Vec2::new(0.0, 0.0));
        assert_eq!(r.point_at(100.0), Vec2::new(100.0, 0.0));
        assert_eq!(r.point_at(150.0), Vec2::new(100.0, 50.0));
        assert_eq!(r.point_at(400.0), Vec2::new(0.0, 0.0));
    }

    #[test]
    fn generators_produce_sane_routes() {
        let g = grid(Vec2::new(0.0, 0.0), 6, 6, 500.0);
        assert_eq!(g.len(), 2);
        assert!(g[0].closed);
        assert!(!g[1].closed);
        assert_eq!(g[0].length(), 4.0 * 2500.0);

        let alt = alternate_route(Vec2::new(0.0, 0.0), Vec2::new(1000.0, 0.0), 200.0);
        assert_eq!(alt.len(), 2);
        assert!(alt[1].length() > alt[0].length());
    }

    #[test]
    fn parked_single_waypoint_route() {
        let routes = vec![Route {
            name: "spot".into(),
            waypoints: vec![Vec2::new(5.0, 5.0)],
            closed: false,
        }];
        let mut c = RouteCursor { route: 0, dist_m: 0.0 };
        assert_eq!(c.advance(&routes, 10.0, 1.0), Vec2::new(5.0, 5.0));
    }
}
