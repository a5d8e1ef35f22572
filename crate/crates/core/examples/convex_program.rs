//! The interior-point core on its own: maximize `2 ln(v0) + ln(v0 + v1)`
//! subject to `v0 + 2 v1 <= 4` and `v0^2 + v1^2 <= 9`.

use edgemarket::convex::{
    solve_convex, Affine, ConvexProgram, LogSum, PowerSum, PowerTerm, SolveOptions,
};

fn main() {
    let objective = LogSum {
        groups: vec![(2.0, vec![0]), (1.0, vec![0, 1])],
    };
    let mut program: ConvexProgram<&str> = ConvexProgram::new(2, objective);
    program.constrain(Affine::new(vec![(0, 1.0), (1, 2.0)], -4.0), "budget");
    program.constrain(
        PowerSum {
            terms: vec![
                PowerTerm {
                    coefficient: 1.0,
                    exponent: 2.0,
                    form: vec![(0, 1.0)],
                },
                PowerTerm {
                    coefficient: 1.0,
                    exponent: 2.0,
                    form: vec![(1, 1.0)],
                },
            ],
            constant: -9.0,
        },
        "disc",
    );

    let sol = solve_convex(&program, &SolveOptions::default());
    println!(
        "status      {:?} after {} Newton steps",
        sol.status, sol.iterations
    );
    println!("v           {:?}", sol.primal);
    println!("objective   {:.9}", sol.objective);
    for (c, theta) in program.constraints.iter().zip(&sol.multipliers) {
        println!("multiplier  {:<6} {theta:.3e}", c.tag);
    }
    println!("max KKT residual {:.2e}", sol.max_residual);
}
