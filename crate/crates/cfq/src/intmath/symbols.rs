/// Kronecker symbol (a/n), the full extension of the Jacobi symbol to all
/// integers n.  Equals the Legendre symbol when n is an odd prime and is
/// completely multiplicative in both arguments.
pub fn kronecker(a: i64, n: i64) -> i32 {
    if n == 0 {
        return if a == 1 || a == -1 { 1 } else { 0 };
    }
    let mut a = a;
    let mut n = n;
    let mut result = 1i32;
    if n < 0 {
        n = -n;
        if a < 0 {
            result = -result;
        }
    }
    // factor out twos from n
    if n % 2 == 0 {
        if a % 2 == 0 {
            return 0;
        }
        while n % 2 == 0 {
            n /= 2;
            result *= kron2(a);
        }
    }
    // now n is odd and positive: Jacobi symbol by reciprocity
    a = a.rem_euclid(n);
    while a != 0 {
        while a % 2 == 0 {
            a /= 2;
            let r = n % 8;
            if r == 3 || r == 5 {
                result = -result;
            }
        }
        std::mem::swap(&mut a, &mut n);
        if a % 4 == 3 && n % 4 == 3 {
            result = -result;
        }
        a %= n;
    }
    if n == 1 {
        result
    } else {
        0
    }
}

/// Kronecker symbol (x/2): 0 for even x, +1 for x = 1, 7 mod 8, -1 for
/// x = 3, 5 mod 8.
pub fn kron2(x: i64) -> i32 {
    if x % 2 == 0 {
        0
    } else {
        match x.rem_euclid(8) {
            1 | 7 => 1,
            _ => -1,
        }
    }
}
