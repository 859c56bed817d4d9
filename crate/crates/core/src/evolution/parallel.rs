//! Population evaluation. With the `parallel` feature the work is spread
//! over a rayon pool; otherwise, or with one worker, it runs in order on the
//! calling thread. Output order always matches input order.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

pub struct Executor {
    #[cfg(feature = "parallel")]
    pool: Option<rayon::ThreadPool>,
}

impl Executor {
    /// `workers == 0` uses one thread per core.
    pub fn new(workers: usize) -> Self {
        #[cfg(feature = "parallel")]
        {
            let pool = (workers != 1).then(|| {
                rayon::ThreadPoolBuilder::new()
                    .num_threads(workers)
                    .build()
                    .expect("rayon pool")
            });
            Self { pool }
        }
        #[cfg(not(feature = "parallel"))]
        {
            let _ = workers;
            Self {}
        }
    }

    pub fn sequential() -> Self {
        Self::new(1)
    }

    pub fn workers(&self) -> usize {
        #[cfg(feature = "parallel")]
        if let Some(pool) = &self.pool {
            return pool.current_num_threads();
        }
        1
    }

    pub fn map<T, U, F>(&self, items: &[T], f: F) -> Vec<U>
    where
        T: Sync,
        U: Send,
        F: Fn(&T) -> U + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        if let Some(pool) = &self.pool {
            return pool.install(|| items.par_iter().map(&f).collect());
        }
        items.iter().map(f).collect()
    }
}

impl Default for Executor {
    fn default() -> Self {
        Self::new(0)
    }
}
