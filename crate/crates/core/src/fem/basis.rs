use crate::geometry::Grid;
use crate::Vec2;

/// Values and gradients at `p` of the four bilinear hats of `cell`, in the
/// vertex order of [`Grid::cell_nodes`].
pub fn local_basis(grid: &Grid, cell: usize, p: Vec2) -> ([f64; 4], [Vec2; 4]) {
    let o = grid.cell_origin(cell);
    let h = grid.h();
    let xi = (p.x - o.x) / h;
    let eta = (p.y - o.y) / h;
    let values = [
        (1.0 - xi) * (1.0 - eta),
        xi * (1.0 - eta),
        xi * eta,
        (1.0 - xi) * eta,
    ];
    let grads = [
        Vec2::new(-(1.0 - eta), -(1.0 - xi)) / h,
        Vec2::new(1.0 - eta, -xi) / h,
        Vec2::new(eta, xi) / h,
        Vec2::new(-eta, 1.0 - xi) / h,
    ];
    (values, grads)
}

/// Hat function of grid node `node` at `p`; the gradient is taken on the
/// cell containing `p` (ties resolved by [`Grid::locate`]).
pub fn basis_eval(grid: &Grid, node: usize, p: Vec2) -> (f64, Vec2) {
    let cell = grid.locate(p);
    match grid.cell_nodes(cell).iter().position(|&k| k == node) {
        Some(v) => {
            let (values, grads) = local_basis(grid, cell, p);
            (values[v].max(0.0), grads[v])
        }
        None => (0.0, Vec2::zeros()),
    }
}
